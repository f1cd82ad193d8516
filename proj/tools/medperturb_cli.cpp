/*******************************************************************************
* Copyright 2026 The medperturb authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*******************************************************************************/

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <medperturb/medperturb.hpp>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

void print_warnings(const medperturb::Warnings& warnings) {
    for (const std::string& message : warnings.messages)
        std::cerr << "warning: " << message << '\n';
}

int run_validate_manifest(const std::string& manifest_path) {
    const medperturb::DatasetManifest manifest = medperturb::load_manifest(manifest_path);
    const std::vector<std::string> problems = medperturb::validate_manifest(manifest);
    for (const std::string& p : problems) std::cerr << "invalid: " << p << '\n';
    if (!problems.empty()) throw medperturb::ValidationError("manifest validation failed");
    std::cout << "manifest ok: " << manifest.dataset_id << " ("
              << medperturb::to_string(manifest.modality) << ", " << manifest.samples.size()
              << " samples)\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic SSIM-calibrated corruption toolkit for medical images"};
    app.require_subcommand(1);

    std::string manifest_path;
    std::string cache_path;
    std::string out_path;
    std::vector<int> levels = {1, 2, 3, 4, 5};
    std::uint64_t seed = 0;
    int workers = 1;
    std::vector<std::string> perturbations;
    bool include_unconverged = true;
    bool dataset_level_calibration = false;

    const auto add_common = [&](CLI::App* cmd, bool needs_out) {
        cmd->add_option("--manifest", manifest_path, "Dataset manifest (JSON)")->required();
        cmd->add_option("--cache", cache_path, "Calibration cache file");
        if (needs_out)
            cmd->add_option("--out", out_path, "Output root directory")->required();
        cmd->add_option("--levels", levels, "Severity levels to process (subset of 1..5)")
            ->delimiter(',')
            ->check(CLI::Range(1, 5));
        cmd->add_option("--seed", seed, "Master seed for all derived randomness");
        cmd->add_option("--workers", workers, "Worker thread count")->check(CLI::Range(1, 256));
        cmd->add_option("--perturbations", perturbations,
                        "Restrict to these perturbation ids (comma separated)")
            ->delimiter(',');
    };

    CLI::App* validate_cmd =
        app.add_subcommand("validate-manifest", "Check a manifest's structure and referenced files");
    validate_cmd->add_option("--manifest", manifest_path, "Dataset manifest (JSON)")->required();

    CLI::App* calibrate_cmd = app.add_subcommand(
        "calibrate", "Search per-image intensities for every severity band and cache them");
    add_common(calibrate_cmd, false);
    calibrate_cmd->get_option("--cache")->required();
    calibrate_cmd->add_flag("--dataset-level-calibration", dataset_level_calibration,
                            "Calibrate a 32-image sample and apply the median intensity");

    CLI::App* perturb_cmd =
        app.add_subcommand("perturb", "Write the calibrated corrupted-image tree and ledger");
    add_common(perturb_cmd, true);
    perturb_cmd->add_flag("--include-unconverged,!--exclude-unconverged", include_unconverged,
                          "Emit conditions whose calibration did not converge (default: include)");

    std::string predictions_path, ground_truth_path, task_name, model_name = "model",
                                                                strategy_name = "default",
                                                                dataset_name;
    CLI::App* score_cmd =
        app.add_subcommand("score", "Score prediction records against ground truth");
    score_cmd->add_option("--predictions", predictions_path, "Prediction records (JSONL)")
        ->required();
    score_cmd->add_option("--ground-truth", ground_truth_path, "Ground-truth records (JSONL)")
        ->required();
    score_cmd->add_option("--task", task_name, "segmentation | vqa | grounding | captioning")
        ->required();
    score_cmd->add_option("--dataset", dataset_name, "Dataset name stamped on records")->required();
    score_cmd->add_option("--model", model_name, "Model name stamped on records");
    score_cmd->add_option("--strategy", strategy_name, "Adaptation strategy stamped on records");
    score_cmd->add_option("--out", out_path, "Records CSV to write")->required();

    std::vector<std::string> record_files;
    std::size_t ranking_size = 15;
    CLI::App* report_cmd =
        app.add_subcommand("report", "Aggregate records into drop tables, curves, and rankings");
    report_cmd->add_option("--records", record_files, "Records CSV files (repeatable)")
        ->required()
        ->delimiter(',');
    report_cmd->add_option("--out", out_path, "Report output directory")->required();
    report_cmd->add_option("--top-k", ranking_size, "Perturbation ranking length");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    medperturb::Warnings warnings;
    try {
        if (validate_cmd->parsed()) return run_validate_manifest(manifest_path);

        const medperturb::PerturbationRegistry registry =
            medperturb::PerturbationRegistry::standard();

        if (calibrate_cmd->parsed() || perturb_cmd->parsed()) {
            const medperturb::DatasetManifest manifest = medperturb::load_manifest(manifest_path);
            medperturb::RunConfig config;
            config.master_seed = seed;
            config.levels = levels;
            config.perturbation_filter = perturbations;
            config.workers = workers;
            config.cache_path = cache_path;
            config.output_root = out_path;
            config.include_unconverged = include_unconverged;
            config.dataset_level_calibration = dataset_level_calibration;

            if (calibrate_cmd->parsed()) {
                medperturb::cmd_calibrate(registry, manifest, config, std::cout, &warnings);
            } else {
                medperturb::CalibrationCache cache =
                    cache_path.empty() ? medperturb::CalibrationCache()
                                       : medperturb::CalibrationCache::load(cache_path);
                const medperturb::PerturbOutcome outcome =
                    medperturb::cmd_perturb(registry, manifest, cache, config, &warnings);
                std::cout << "perturb: " << outcome.written << " images written, "
                          << outcome.skipped_unconverged << " skipped (unconverged), ledger at "
                          << outcome.ledger_path.string() << '\n';
            }
        } else if (score_cmd->parsed()) {
            const auto task = medperturb::task_from_string(task_name);
            if (!task) throw medperturb::ValidationError("unknown task: " + task_name);
            medperturb::ScoreConfig config;
            config.predictions = predictions_path;
            config.ground_truth = ground_truth_path;
            config.task = *task;
            config.model = model_name;
            config.strategy = strategy_name;
            config.dataset = dataset_name;
            config.out_csv = out_path;
            const std::vector<medperturb::MetricRecord> records =
                medperturb::cmd_score(registry, config, &warnings);
            std::cout << "score: " << records.size() << " metric records written to " << out_path
                      << '\n';
        } else if (report_cmd->parsed()) {
            std::vector<std::filesystem::path> paths(record_files.begin(), record_files.end());
            medperturb::ReportOptions options;
            options.ranking_size = ranking_size;
            medperturb::cmd_report(paths, out_path, options, &warnings);
            std::cout << "report written to " << out_path << '\n';
        }
    } catch (const medperturb::ValidationError& e) {
        print_warnings(warnings);
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        print_warnings(warnings);
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    print_warnings(warnings);
    return kExitOk;
}
