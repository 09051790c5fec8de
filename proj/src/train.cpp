#include "evt/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace evt {

std::string format_step_record(const StepRecord& rec) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "{\"step\": %d, \"loss_total\": %.17g, \"loss_cls\": %.17g, "
                  "\"loss_reg\": %.17g, \"loss_sem\": %.17g, \"loss_cal\": %.17g, "
                  "\"lr\": %.17g}",
                  rec.step, rec.loss_total, rec.loss_cls, rec.loss_reg, rec.loss_sem,
                  rec.loss_cal, rec.lr);
    return buf;
}

Trainer::Trainer(const RunConfig& cfg, const SyntheticDataset& data)
    : cfg_(cfg),
      model_cfg_(model_config_from(cfg, data)),
      data_(&data),
      train_indices_(data.indices_of("train")),
      params_(build_params(model_cfg_, cfg.seed)),
      optimizer_(AdamWConfig{cfg.optimizer.beta1, cfg.optimizer.beta2, 1e-8,
                             cfg.optimizer.weight_decay}),
      order_rng_(cfg.seed ^ 0xBA7C40DE) {
    validate_run_config(cfg);
    if (train_indices_.empty()) throw ContractError("training requires a non-empty train split");
}

void Trainer::restore(const Checkpoint& ckpt) {
    if (ckpt.params.count() != params_.count())
        throw ContractError("checkpoint parameter layout does not match this configuration");
    for (std::size_t i = 0; i < params_.count(); ++i) {
        auto& [name, tensor] = params_.mutable_entries()[i];
        const auto& [saved_name, saved] = ckpt.params.entries()[i];
        if (name != saved_name || tensor.shape() != saved.shape())
            throw ContractError("checkpoint parameter " + saved_name +
                                " does not match expected " + name);
        std::copy(saved.data().begin(), saved.data().end(), tensor.mutable_data().begin());
    }
    optimizer_.restore(ckpt.adam_step_count, ckpt.adam_m, ckpt.adam_v);
    order_rng_.set_state(ckpt.rng_state);
    next_step_ = static_cast<int>(ckpt.step);
}

Checkpoint Trainer::make_checkpoint() const {
    Checkpoint ckpt;
    ckpt.step = static_cast<std::uint64_t>(next_step_);
    ckpt.config_json = run_config_to_json(cfg_).dump();
    for (const auto& [name, t] : params_.entries())
        ckpt.params.add(name, Tensor::from_data(t.shape(),
                                                {t.data().begin(), t.data().end()}));
    ckpt.adam_step_count = optimizer_.step_count();
    if (optimizer_.m().empty()) {
        for (const auto& [name, t] : params_.entries()) {
            ckpt.adam_m.emplace_back(t.size(), 0.0);
            ckpt.adam_v.emplace_back(t.size(), 0.0);
        }
    } else {
        ckpt.adam_m = optimizer_.m();
        ckpt.adam_v = optimizer_.v();
    }
    ckpt.rng_state = order_rng_.state();
    return ckpt;
}

std::vector<int> Trainer::pick_batch() {
    std::vector<int> pool = train_indices_;
    const std::size_t batch =
        std::min<std::size_t>(pool.size(), static_cast<std::size_t>(cfg_.optimizer.batch_size));
    for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t j = b + order_rng_.uniform_index(pool.size() - b);
        std::swap(pool[b], pool[j]);
    }
    pool.resize(batch);
    return pool;
}

StepRecord Trainer::step() {
    if (done()) throw ContractError("training already reached total_steps");
    const int t = next_step_;
    const double lr = lr_at(t, cfg_.optimizer.lr, cfg_.optimizer.warmup_steps,
                            cfg_.optimizer.total_steps);
    const std::vector<int> batch = pick_batch();

    // Pool the batch's sub-event embeddings; bitwise-identical embeddings
    // collapse so InfoNCE never competes a positive against its own copies.
    std::vector<Tensor> all_embeddings;
    std::vector<std::size_t> video_base;
    for (int vi : batch) {
        video_base.push_back(all_embeddings.size());
        for (const auto& s : (*data_).videos[vi].bundle.subs)
            all_embeddings.push_back(s.embedding);
    }
    std::vector<int> remap;
    const std::vector<Tensor> candidates = dedup_embeddings(all_embeddings, remap);

    params_.zero_grads();
    StepRecord rec;
    {
        Tape tape;
        LossParts acc;
        for (std::size_t b = 0; b < batch.size(); ++b) {
            const DatasetVideo& video = (*data_).videos[batch[b]];
            const TokenTargets targets =
                make_targets(video.features.spans, video.script, video.bundle);
            std::vector<int> positives;
            positives.reserve(targets.sem_positive.size());
            for (int clip : targets.sem_positive)
                positives.push_back(remap[video_base[b] + clip]);

            VideoLoss vl;
            try {
                vl = compute_video_loss(video, model_cfg_, params_, cfg_.thresholds, candidates,
                                        positives);
            } catch (const NumericError& e) {
                throw NumericError("step " + std::to_string(t) + ", video " +
                                   video.features.video_id + ": " + e.what());
            }
            if (b == 0) {
                acc = vl.parts;
            } else {
                acc.cls = add(acc.cls, vl.parts.cls);
                acc.reg = add(acc.reg, vl.parts.reg);
                acc.sem = add(acc.sem, vl.parts.sem);
                acc.cal = add(acc.cal, vl.parts.cal);
            }
        }
        const double inv = 1.0 / static_cast<double>(batch.size());
        LossParts mean{scale(acc.cls, inv), scale(acc.reg, inv), scale(acc.sem, inv),
                       scale(acc.cal, inv)};
        Tensor total;
        try {
            total = total_loss(mean, cfg_.loss);
        } catch (const NumericError& e) {
            throw NumericError("step " + std::to_string(t) + ": " + e.what());
        }
        tape.backward(total);

        rec = {t,
               total.value(),
               mean.cls.value(),
               mean.reg.value(),
               mean.sem.value(),
               mean.cal.value(),
               lr};
    }
    optimizer_.step(params_, lr);
    ++next_step_;
    return rec;
}

std::vector<StepRecord> train_to_completion(Trainer& trainer) {
    std::vector<StepRecord> history;
    while (!trainer.done()) history.push_back(trainer.step());
    return history;
}

EvalReport run_eval(const ParamSet& params, const RunConfig& cfg, const SyntheticDataset& data,
                    const std::string& split) {
    const ModelConfig mcfg = model_config_from(cfg, data);
    std::vector<LocalizedInstance> preds, gts;
    for (int vi : data.indices_of(split)) {
        const DatasetVideo& video = data.videos[vi];
        const VideoForward fwd = forward_video(video.features, video.bundle, mcfg, params);
        for (const auto& d : decode(fwd.head, video.features.spans,
                                    cfg.thresholds.score_thresh, cfg.thresholds.nms_iou))
            preds.push_back({video.features.video_id, d.instance});
        for (const auto& e : video.script.events)
            gts.push_back({video.features.video_id,
                           ActionInstance{e.class_id, e.start_sec, e.end_sec, 1.0}});
    }
    return evaluate(preds, gts, cfg.thresholds.eval_tious);
}

double dataset_loss(const ParamSet& params, const RunConfig& cfg, const SyntheticDataset& data,
                    const std::string& split) {
    const ModelConfig mcfg = model_config_from(cfg, data);
    const std::vector<int> indices = data.indices_of(split);
    if (indices.empty()) throw ContractError("dataset_loss over an empty split");

    std::vector<Tensor> all_embeddings;
    std::vector<std::size_t> video_base;
    for (int vi : indices) {
        video_base.push_back(all_embeddings.size());
        for (const auto& s : data.videos[vi].bundle.subs)
            all_embeddings.push_back(s.embedding);
    }
    std::vector<int> remap;
    const std::vector<Tensor> candidates = dedup_embeddings(all_embeddings, remap);

    double total = 0.0;
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const DatasetVideo& video = data.videos[indices[b]];
        const TokenTargets targets =
            make_targets(video.features.spans, video.script, video.bundle);
        std::vector<int> positives;
        for (int clip : targets.sem_positive)
            positives.push_back(remap[video_base[b] + clip]);
        total += compute_video_loss(video, mcfg, params, cfg.thresholds, candidates, positives)
                     .total.value();
    }
    return total / static_cast<double>(indices.size());
}

std::vector<AblationRow> ablation_rows(const RunConfig& base) {
    const double sem = base.loss.lambda_sem;
    const double cal = base.loss.lambda_cal;
    GuidanceToggles g = base.guidance;  // keep gamma / calib_rounds
    auto with = [&](bool gep, bool tsep, bool calibrate, bool advanced) {
        GuidanceToggles t = g;
        t.gep = gep;
        t.tsep = tsep;
        t.calibrate = calibrate;
        t.advanced_fusion = advanced;
        return t;
    };
    // The semantic loss needs sub-event prompts, the calibration loss needs
    // the graph module, so each row only keeps the weights its inputs support.
    return {
        {"baseline", with(false, false, false, false), 0.0, 0.0},
        {"gep", with(true, false, false, false), 0.0, 0.0},
        {"tsep", with(false, true, false, false), sem, 0.0},
        {"simple_fusion", with(true, true, false, false), sem, 0.0},
        {"full", with(true, true, true, true), sem, cal},
    };
}

AblationReport run_ablation(const RunConfig& base, int num_seeds, std::ostream* log) {
    if (num_seeds < 1) throw ConfigError("ablation requires at least one seed");
    const auto rows = ablation_rows(base);

    AblationReport report;
    report.num_seeds = num_seeds;
    for (const auto& row : rows) report.row_names.push_back(row.name);
    report.seed_maps.assign(rows.size(), {});

    for (int s = 0; s < num_seeds; ++s) {
        const std::uint64_t master = base.seed + static_cast<std::uint64_t>(s);
        const SyntheticDataset data = generate_dataset(base.dataset, master);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            RunConfig cfg = base;
            cfg.seed = master;
            cfg.encoder.seed = master ^ 0xE4C0DEULL;
            cfg.guidance = rows[r].toggles;
            cfg.loss.lambda_sem = rows[r].lambda_sem;
            cfg.loss.lambda_cal = rows[r].lambda_cal;
            cfg.thresholds.eval_tious = {0.5};  // the ablation metric

            Trainer trainer(cfg, data);
            train_to_completion(trainer);
            const EvalReport ev = run_eval(trainer.params(), cfg, data, "val");
            const double map50 = ev.map_defined ? ev.per_threshold_map.at(0.5) : 0.0;
            report.seed_maps[r].push_back(map50);
            if (log)
                (*log) << "  seed " << s << " " << rows[r].name << ": val mAP@0.5 = " << map50
                       << "\n";
        }
    }

    for (const auto& per_seed : report.seed_maps) {
        std::vector<double> sorted = per_seed;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t n = sorted.size();
        report.medians.push_back(n % 2 == 1 ? sorted[n / 2]
                                            : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]));
    }
    return report;
}

nlohmann::json ablation_report_to_json(const AblationReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < report.row_names.size(); ++r)
        rows.push_back({{"name", report.row_names[r]},
                        {"val_map_at_0.5_per_seed", report.seed_maps[r]},
                        {"median_val_map_at_0.5", report.medians[r]}});
    return {{"num_seeds", report.num_seeds}, {"rows", rows}};
}

}  // namespace evt
