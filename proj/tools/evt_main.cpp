#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "evt/checkpoint.hpp"
#include "evt/config.hpp"
#include "evt/dataset.hpp"
#include "evt/gradcheck_suite.hpp"
#include "evt/train.hpp"

namespace {

using namespace evt;

int cmd_gen_data(const std::string& spec_path, const std::string& out_dir, std::uint64_t seed) {
    const GenSpec spec = load_gen_spec(spec_path);
    const SyntheticDataset data = generate_dataset(spec, seed);
    write_dataset(data, out_dir);
    std::cout << "wrote " << data.videos.size() << " videos (" << data.indices_of("train").size()
              << " train / " << data.indices_of("val").size() << " val) to " << out_dir << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, const std::string& resume_path) {
    const RunConfig cfg = load_run_config(config_path);
    const SyntheticDataset data = read_dataset(data_dir);
    Trainer trainer(cfg, data);
    if (!resume_path.empty()) {
        trainer.restore(load_checkpoint(resume_path));
        std::cout << "resumed from step " << trainer.next_step() << "\n";
    }

    std::filesystem::create_directories(out_dir);
    std::ostringstream history;
    while (!trainer.done()) {
        const StepRecord rec = trainer.step();
        if (rec.step % cfg.log_every == 0) history << format_step_record(rec) << "\n";
        if (cfg.checkpoint_every > 0 && trainer.next_step() % cfg.checkpoint_every == 0 &&
            !trainer.done())
            save_checkpoint(trainer.make_checkpoint(),
                            out_dir + "/ckpt_" + std::to_string(trainer.next_step()) + ".bin");
        if (rec.step % 50 == 0)
            std::cout << "step " << rec.step << " loss " << rec.loss_total << " lr " << rec.lr
                      << "\n";
    }
    atomic_write_file(out_dir + "/metrics.jsonl", history.str());
    save_checkpoint(trainer.make_checkpoint(), out_dir + "/checkpoint.bin");
    std::cout << "finished " << cfg.optimizer.total_steps << " steps; checkpoint and metrics in "
              << out_dir << "\n";
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_dir, const std::string& split,
             const std::string& report_path) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    const RunConfig cfg = run_config_from_json(nlohmann::json::parse(ckpt.config_json));
    const SyntheticDataset data = read_dataset(data_dir);

    Trainer trainer(cfg, data);  // rebuilds the parameter layout
    trainer.restore(ckpt);
    const EvalReport report = run_eval(trainer.params(), cfg, data, split);

    atomic_write_file(report_path, report_to_json(report).dump(2) + "\n");
    if (report.map_defined) {
        std::cout << "split " << split << ": average mAP = " << report.average_map << " over "
                  << report.per_threshold_map.size() << " thresholds\n";
        for (const auto& [t, v] : report.per_threshold_map)
            std::cout << "  mAP@" << t << " = " << v << "\n";
    } else {
        std::cout << "split " << split << ": no ground truth, mAP undefined\n";
    }
    std::cout << "report written to " << report_path << "\n";
    return 0;
}

int cmd_gradcheck(const std::string& module) {
    const auto start = std::chrono::steady_clock::now();
    const auto cases = run_gradcheck(module);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    for (const auto& c : cases)
        std::printf("[%s] %-28s max_rel_err=%.3e (%d seeds, tol %.0e)\n",
                    c.pass ? "PASS" : "FAIL", c.name.c_str(), c.max_rel_err, c.seeds,
                    c.tolerance);
    std::printf("%zu checks in %.1f s\n", cases.size(), seconds);
    return gradcheck_all_passed(cases) ? 0 : 1;
}

int cmd_ablate(const std::string& config_path, const std::string& out_path, int seeds) {
    const RunConfig cfg = load_run_config(config_path);
    std::cout << "running ablation matrix (" << seeds << " seeds)\n";
    const AblationReport report = run_ablation(cfg, seeds, &std::cout);

    std::printf("%-16s", "row");
    for (int s = 0; s < report.num_seeds; ++s) std::printf("  seed%-3d", s);
    std::printf("  median\n");
    for (std::size_t r = 0; r < report.row_names.size(); ++r) {
        std::printf("%-16s", report.row_names[r].c_str());
        for (double v : report.seed_maps[r]) std::printf("  %.4f ", v);
        std::printf("  %.4f\n", report.medians[r]);
    }

    if (!out_path.empty()) {
        atomic_write_file(out_path, ablation_report_to_json(report).dump(2) + "\n");
        std::cout << "comparison written to " << out_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"toy video transformer with multi-level prompt guidance"};
    app.require_subcommand(1);

    std::string spec_path, out_dir, config_path, data_dir, resume_path;
    std::string ckpt_path, split = "val", report_path = "report.json";
    std::string module = "all";
    std::string ablate_out;
    std::uint64_t seed = 0;
    int ablate_seeds = 5;

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset directory");
    gen->add_option("--spec", spec_path, "dataset spec JSON")->required();
    gen->add_option("--out", out_dir, "output directory")->required();
    gen->add_option("--seed", seed, "generation seed")->required();

    auto* train = app.add_subcommand("train", "train on a dataset directory");
    train->add_option("--config", config_path, "run config JSON")->required();
    train->add_option("--data", data_dir, "dataset directory")->required();
    train->add_option("--out", out_dir, "output directory")->required();
    train->add_option("--resume", resume_path, "checkpoint to resume from");

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    eval->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    eval->add_option("--data", data_dir, "dataset directory")->required();
    eval->add_option("--split", split, "split to evaluate (train|val)");
    eval->add_option("--report", report_path, "report JSON path");

    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient checks");
    gc->add_option("--module", module,
                   "all|tensor|encoder|gate|refine|calibrate|losses|pipeline");

    auto* ablate = app.add_subcommand("ablate", "run the ablation row matrix");
    ablate->add_option("--config", config_path, "run config JSON")->required();
    ablate->add_option("--out", ablate_out, "comparison JSON path");
    ablate->add_option("--seeds", ablate_seeds, "number of seeds");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(spec_path, out_dir, seed);
        if (train->parsed()) return cmd_train(config_path, data_dir, out_dir, resume_path);
        if (eval->parsed()) return cmd_eval(ckpt_path, data_dir, split, report_path);
        if (gc->parsed()) return cmd_gradcheck(module);
        if (ablate->parsed()) return cmd_ablate(config_path, ablate_out, ablate_seeds);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
