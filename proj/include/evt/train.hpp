#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "evt/checkpoint.hpp"
#include "evt/dataset.hpp"
#include "evt/eval.hpp"
#include "evt/model.hpp"
#include "evt/optimizer.hpp"

namespace evt {

struct StepRecord {
    int step = 0;
    double loss_total = 0.0;
    double loss_cls = 0.0;
    double loss_reg = 0.0;
    double loss_sem = 0.0;
    double loss_cal = 0.0;
    double lr = 0.0;
};

// One metrics-history line; %.17g doubles so identical runs produce
// byte-identical files.
std::string format_step_record(const StepRecord& rec);

// Single-threaded training loop: per step one deterministic batch draw, one
// taped forward/backward over the batch-mean four-term loss, one AdamW update
// on the warmup+cosine schedule.
class Trainer {
public:
    Trainer(const RunConfig& cfg, const SyntheticDataset& data);

    void restore(const Checkpoint& ckpt);
    Checkpoint make_checkpoint() const;

    StepRecord step();
    bool done() const { return next_step_ >= cfg_.optimizer.total_steps; }
    int next_step() const { return next_step_; }

    const ParamSet& params() const { return params_; }
    ParamSet& mutable_params() { return params_; }
    const ModelConfig& model_config() const { return model_cfg_; }
    const RunConfig& run_config() const { return cfg_; }

private:
    std::vector<int> pick_batch();

    RunConfig cfg_;
    ModelConfig model_cfg_;
    const SyntheticDataset* data_;
    std::vector<int> train_indices_;
    ParamSet params_;
    AdamW optimizer_;
    Rng order_rng_;
    int next_step_ = 0;
};

std::vector<StepRecord> train_to_completion(Trainer& trainer);

// Decodes every video of the split and scores it against the scripted ground
// truth at the configured tIoU grid.
EvalReport run_eval(const ParamSet& params, const RunConfig& cfg, const SyntheticDataset& data,
                    const std::string& split);

// Forward-only total loss over a whole split (candidates pooled across the
// split), e.g. for before/after training comparisons.
double dataset_loss(const ParamSet& params, const RunConfig& cfg, const SyntheticDataset& data,
                    const std::string& split);

// The ablation row matrix: baseline, +GEP, +TSEP, simple fusion, full model.
struct AblationRow {
    std::string name;
    GuidanceToggles toggles;
    double lambda_sem = 0.0;
    double lambda_cal = 0.0;
};

std::vector<AblationRow> ablation_rows(const RunConfig& base);

struct AblationReport {
    std::vector<std::string> row_names;
    std::vector<std::vector<double>> seed_maps;  // [row][seed] val mAP@0.5
    std::vector<double> medians;                 // per row
    int num_seeds = 0;
};

// Trains the row matrix on freshly generated data for each of num_seeds
// seeds (paired across rows) and reports val mAP@0.5 per cell.
AblationReport run_ablation(const RunConfig& base, int num_seeds, std::ostream* log = nullptr);

nlohmann::json ablation_report_to_json(const AblationReport& report);

}  // namespace evt
