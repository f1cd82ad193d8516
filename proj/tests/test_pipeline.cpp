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

#include <catch2/catch_amalgamated.hpp>

#include <medperturb/pipeline.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "support/probes.hpp"

using namespace medperturb;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("medperturb_pipe_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

/// Relative path → file bytes for a whole tree.
std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file())
            files[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
    return files;
}

std::vector<std::vector<std::string>> parse_csv(const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        rows.push_back(std::move(fields));
    }
    return rows;
}

DatasetManifest one_sample_manifest(const std::string& dataset_id, Modality modality,
                                    const fs::path& image_path) {
    DatasetManifest m;
    m.dataset_id = dataset_id;
    m.modality = modality;
    SampleEntry s;
    s.sample_id = "s1";
    s.image_path = image_path;
    m.samples.push_back(std::move(s));
    return m;
}

int run_cli(const std::string& args) {
    const std::string command =
        std::string(MEDPERTURB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(command.c_str());
    return WEXITSTATUS(status);
}

} // namespace

TEST_CASE("perturbation runs write a complete sorted tree") {
    const fs::path dir = temp_dir("tree");
    const ImageBuffer probe = medperturb::testing::textured_probe(31, 64, 64);
    save_image(probe, dir / "s1.png");

    const PerturbationRegistry registry = PerturbationRegistry::standard();
    const DatasetManifest manifest =
        one_sample_manifest("demo_path", Modality::Pathology, dir / "s1.png");
    RunConfig config;
    config.master_seed = 7;
    config.output_root = dir / "out";

    CalibrationCache cache;
    Warnings warnings;
    const PerturbOutcome outcome = cmd_perturb(registry, manifest, cache, config, &warnings);

    // 13 pathology-applicable perturbations × 5 levels, nothing gated.
    CHECK(outcome.written == 65);
    CHECK(outcome.skipped_unconverged == 0);
    REQUIRE(outcome.ledger.size() == 65);

    std::size_t pngs = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir / "out"))
        if (e.is_regular_file() && e.path().extension() == ".png") ++pngs;
    CHECK(pngs == 65);
    CHECK(fs::exists(dir / "out/demo_path/path_stain_shift/5/s1.png"));
    CHECK(fs::exists(dir / "out/demo_path/gaussian_noise/1/s1.png"));

    // No annotations on this sample, so the join file exists but is empty.
    REQUIRE(fs::exists(dir / "out/demo_path/gt_records.jsonl"));
    CHECK(slurp(dir / "out/demo_path/gt_records.jsonl").empty());

    // Ledger: header, canonical sort order, resolvable output paths, and the
    // documented per-application seed derivation.
    const auto rows = parse_csv(outcome.ledger_path);
    REQUIRE(rows.size() == 66);
    {
        std::ostringstream header;
        for (std::size_t i = 0; i < rows[0].size(); ++i)
            header << (i ? "," : "") << rows[0][i];
        CHECK(header.str() == kLedgerHeader);
    }
    for (std::size_t i = 2; i < rows.size(); ++i) {
        const auto& a = rows[i - 1];
        const auto& b = rows[i];
        const auto key = [](const std::vector<std::string>& r) {
            return std::make_tuple(r[0], r[2], std::stoi(r[4]), r[1]);
        };
        CHECK(key(a) < key(b));
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
        REQUIRE(rows[i].size() == 10);
        CHECK(fs::exists(config.output_root / rows[i][9]));
        const std::uint64_t expected =
            derive_seed(7, "demo_path", rows[i][1], rows[i][2], std::stoi(rows[i][4]));
        CHECK(std::stoull(rows[i][8]) == expected);
        if (rows[i][2] == "path_stain_shift") CHECK(rows[i][3] == "med_specific");
        if (rows[i][2] == "gaussian_noise") CHECK(rows[i][3] == "base");
    }

    // Severity levels are genuinely different images.
    CHECK(slurp(dir / "out/demo_path/gaussian_noise/1/s1.png") !=
          slurp(dir / "out/demo_path/gaussian_noise/5/s1.png"));
}

TEST_CASE("perturbation runs are bitwise reproducible across worker counts") {
    const fs::path dir = temp_dir("repro");
    const ImageBuffer probe = medperturb::testing::textured_probe(57, 64, 64);
    save_image(probe, dir / "s1.png");

    const PerturbationRegistry registry = PerturbationRegistry::standard();
    const DatasetManifest manifest =
        one_sample_manifest("demo_path", Modality::Pathology, dir / "s1.png");

    const auto run = [&](const fs::path& root, int workers) {
        RunConfig config;
        config.master_seed = 11;
        config.levels = {2, 4};
        config.perturbation_filter = {"gaussian_noise", "rotation", "path_stain_shift"};
        config.output_root = root;
        config.cache_path = root / "cache.json";
        config.workers = workers;
        CalibrationCache cache;
        return cmd_perturb(registry, manifest, cache, config, nullptr);
    };

    const PerturbOutcome first = run(dir / "run_a", 1);
    const PerturbOutcome second = run(dir / "run_b", 2);
    CHECK(first.written == 6);
    CHECK(second.written == 6);

    const auto tree_a = snapshot(dir / "run_a");
    const auto tree_b = snapshot(dir / "run_b");
    REQUIRE(tree_a.size() == tree_b.size());
    for (const auto& [rel, bytes] : tree_a) {
        REQUIRE(tree_b.count(rel) == 1);
        CHECK(tree_b.at(rel) == bytes);
    }
}

TEST_CASE("geometric runs co-transform masks and boxes") {
    const fs::path dir = temp_dir("cotransform");
    // Off-centre disk so a rotation about the image centre actually moves it.
    const ImageBuffer disk = medperturb::testing::disk_image(64, 64, 24, 20, 10);
    const ImageBuffer mask = medperturb::testing::disk_mask(64, 64, 24, 20, 10);
    save_image(disk, dir / "s1.png");
    save_image(mask, dir / "s1_mask.png");

    const PerturbationRegistry registry = PerturbationRegistry::standard();
    DatasetManifest manifest = one_sample_manifest("demo_ct", Modality::CT, dir / "s1.png");
    manifest.samples[0].mask_path = dir / "s1_mask.png";
    manifest.samples[0].box = {14.0, 10.0, 34.0, 30.0};

    RunConfig config;
    config.master_seed = 3;
    config.levels = {3};
    config.perturbation_filter = {"rotation"};
    config.output_root = dir / "out";
    CalibrationCache cache;
    const PerturbOutcome outcome = cmd_perturb(registry, manifest, cache, config, nullptr);
    REQUIRE(outcome.written == 1);

    const LedgerRow& row = outcome.ledger.front();
    const Perturbation& rotation = registry.require("rotation");
    const Affine fwd = rotation.transform(64, 64, row.t, row.seed);

    // The emitted ground-truth mask is exactly the nearest-neighbour warp of
    // the clean mask through the same transform.
    const fs::path mask_out = dir / "out/demo_ct/rotation/3/gt/s1_mask.png";
    REQUIRE(fs::exists(mask_out));
    const ImageBuffer emitted = load_image(mask_out);
    const ImageBuffer expected = warp_nearest(load_image(dir / "s1_mask.png"), fwd.inverse());
    CHECK(emitted.data == expected.data);

    // And it stays aligned with the perturbed image: binarizing the warped
    // disk recovers (approximately) the warped mask.
    const ImageBuffer perturbed = load_image(dir / "out/demo_ct/rotation/3/s1.png");
    const double aligned =
        mask_iou(mask_from_image(perturbed), mask_from_image(emitted));
    CHECK(aligned > 0.8);

    // The join file carries the clean annotations plus the transformed pair.
    const std::vector<Record> gt = load_records(dir / "out/demo_ct/gt_records.jsonl");
    REQUIRE(gt.size() == 4);
    CHECK(gt[0].task == Task::segmentation);
    CHECK_FALSE(gt[0].perturbation_id.has_value());
    CHECK(gt[1].task == Task::grounding);

    const Record* seg = nullptr;
    const Record* grd = nullptr;
    for (const Record& r : gt)
        if (r.perturbation_id == "rotation") {
            if (r.task == Task::segmentation) seg = &r;
            if (r.task == Task::grounding) grd = &r;
        }
    REQUIRE(seg != nullptr);
    REQUIRE(grd != nullptr);
    CHECK(seg->level == 3);
    CHECK(*seg->mask == mask_out);

    const std::array<double, 4> expected_box =
        detail::transform_box(*manifest.samples[0].box, fwd, 64, 64);
    REQUIRE(grd->box.has_value());
    for (int i = 0; i < 4; ++i)
        CHECK_THAT((*grd->box)[static_cast<std::size_t>(i)],
                   Catch::Matchers::WithinAbs(expected_box[static_cast<std::size_t>(i)], 1e-9));
}

TEST_CASE("calibration command summarizes convergence") {
    const fs::path dir = temp_dir("calsummary");
    save_image(medperturb::testing::textured_probe(77, 48, 48), dir / "s1.png");
    const PerturbationRegistry registry = PerturbationRegistry::standard();
    const DatasetManifest manifest =
        one_sample_manifest("demo_ct", Modality::CT, dir / "s1.png");
    RunConfig config;
    config.levels = {2};
    config.perturbation_filter = {"brightness"};
    config.cache_path = dir / "cache.json";

    std::ostringstream summary;
    const CalibrationCache cache = cmd_calibrate(registry, manifest, config, summary);
    CHECK(cache.size() == 1);
    CHECK_THAT(summary.str(), Catch::Matchers::ContainsSubstring("calibration for demo_ct") &&
                                  Catch::Matchers::ContainsSubstring("1 entries") &&
                                  Catch::Matchers::ContainsSubstring("level 2:"));
}

TEST_CASE("scoring joins predictions with condition-specific ground truth") {
    const fs::path dir = temp_dir("score_seg");
    save_image(medperturb::testing::disk_mask(32, 32, 10, 10, 6), dir / "gt_a.png");
    save_image(medperturb::testing::disk_mask(32, 32, 22, 22, 6), dir / "gt_b.png");
    save_image(medperturb::testing::disk_mask(32, 32, 15, 15, 6), dir / "gt_a_rot.png");

    write_text(dir / "gt.jsonl",
               R"({"sample_id":"a","task":"segmentation","mask":"gt_a.png"})" "\n"
               R"({"sample_id":"b","task":"segmentation","mask":"gt_b.png"})" "\n"
               R"({"sample_id":"a","task":"segmentation","perturbation_id":"rotation","level":3,"mask":"gt_a_rot.png"})" "\n");
    write_text(dir / "preds.jsonl",
               R"({"sample_id":"a","task":"segmentation","mask":"gt_a.png"})" "\n"
               R"({"sample_id":"b","task":"segmentation","mask":"gt_b.png"})" "\n"
               R"({"sample_id":"a","task":"segmentation","perturbation_id":"rotation","level":3,"mask":"gt_a_rot.png"})" "\n"
               R"({"sample_id":"b","task":"segmentation","perturbation_id":"rotation","level":3,"mask":"gt_b.png"})" "\n"
               R"({"sample_id":"a","task":"segmentation","perturbation_id":"gaussian_noise","level":2,"mask":"gt_a_rot.png"})" "\n");

    const PerturbationRegistry registry = PerturbationRegistry::standard();
    ScoreConfig config;
    config.predictions = dir / "preds.jsonl";
    config.ground_truth = dir / "gt.jsonl";
    config.task = Task::segmentation;
    config.model = "m";
    config.strategy = "zero_shot";
    config.dataset = "demo_ct";
    config.out_csv = dir / "records.csv";

    Warnings warnings;
    const std::vector<MetricRecord> records = cmd_score(registry, config, &warnings);

    // Conditions in map order: clean, gaussian_noise/2, rotation/3 — two
    // metrics each.
    REQUIRE(records.size() == 6);
    CHECK(records[0].perturbation_id == "clean");
    CHECK(records[0].metric_name == "mask_iou");
    CHECK(records[0].value == 1.0);
    CHECK(records[1].metric_name == "mask_dice");
    CHECK(records[1].value == 1.0);

    // gaussian_noise/2 has no override, so sample a's shifted mask scores
    // against the clean annotation; sample b's missing prediction scores 0.
    const double a_vs_clean = mask_iou(mask_from_image(load_image(dir / "gt_a_rot.png")),
                                       mask_from_image(load_image(dir / "gt_a.png")));
    CHECK(a_vs_clean > 0.0);
    CHECK(a_vs_clean < 1.0);
    CHECK(records[2].perturbation_id == "gaussian_noise");
    CHECK(records[2].level == 2);
    CHECK(records[2].category == "base");
    CHECK_THAT(records[2].value, Catch::Matchers::WithinAbs(a_vs_clean / 2.0, 1e-12));

    // rotation/3 predictions match the override for a and clean truth for b.
    CHECK(records[4].perturbation_id == "rotation");
    CHECK(records[4].value == 1.0);
    CHECK(records[5].value == 1.0);

    REQUIRE_FALSE(warnings.empty());
    CHECK_THAT(warnings.messages.front(),
               Catch::Matchers::ContainsSubstring("gaussian_noise/2") &&
                   Catch::Matchers::ContainsSubstring("1 of 2 predictions missing"));

    // The CSV echo parses back to the same values.
    const std::vector<MetricRecord> reread = read_records_csv(dir / "records.csv");
    REQUIRE(reread.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) CHECK(reread[i].value == records[i].value);
}

TEST_CASE("scoring covers vqa, grounding, and captioning payloads") {
    const fs::path dir = temp_dir("score_tasks");
    const PerturbationRegistry registry = PerturbationRegistry::standard();

    SECTION("vqa letters and option text") {
        write_text(dir / "gt.jsonl",
                   R"({"sample_id":"a","task":"vqa","answer":"b","answer_text":"cyst"})" "\n"
                   R"({"sample_id":"b","task":"vqa","answer":"a"})" "\n");
        write_text(dir / "preds.jsonl",
                   R"({"sample_id":"a","task":"vqa","answer":"B."})" "\n"
                   R"({"sample_id":"b","task":"vqa","answer":"a"})" "\n"
                   R"({"sample_id":"a","task":"vqa","answer":"cyst","perturbation_id":"brightness","level":1})" "\n"
                   R"({"sample_id":"b","task":"vqa","answer":"c","perturbation_id":"brightness","level":1})" "\n");
        ScoreConfig config;
        config.predictions = dir / "preds.jsonl";
        config.ground_truth = dir / "gt.jsonl";
        config.task = Task::vqa;
        config.dataset = "demo_xray";
        const std::vector<MetricRecord> records = cmd_score(registry, config);
        // Conditions order lexicographically, so brightness precedes clean.
        REQUIRE(records.size() == 2);
        CHECK(records[0].metric_name == "vqa_accuracy");
        CHECK(records[0].perturbation_id == "brightness");
        CHECK(records[0].value == 0.5); // option text matches, wrong letter doesn't
        CHECK(records[1].perturbation_id == "clean");
        CHECK(records[1].value == 1.0);
    }

    SECTION("grounding threshold") {
        write_text(dir / "gt.jsonl",
                   R"({"sample_id":"a","task":"grounding","box":[10,10,30,30]})" "\n"
                   R"({"sample_id":"b","task":"grounding","box":[5,5,15,20]})" "\n");
        write_text(dir / "preds.jsonl",
                   R"({"sample_id":"a","task":"grounding","box":[10,10,30,30]})" "\n"
                   R"({"sample_id":"b","task":"grounding","box":[5,5,15,20]})" "\n"
                   R"({"sample_id":"a","task":"grounding","box":[11,11,31,31],"perturbation_id":"pixelate","level":2})" "\n"
                   R"({"sample_id":"b","task":"grounding","box":[16,5,26,20],"perturbation_id":"pixelate","level":2})" "\n");
        ScoreConfig config;
        config.predictions = dir / "preds.jsonl";
        config.ground_truth = dir / "gt.jsonl";
        config.task = Task::grounding;
        config.dataset = "demo_xray";
        const std::vector<MetricRecord> records = cmd_score(registry, config);
        REQUIRE(records.size() == 2);
        CHECK(records[0].value == 1.0);
        CHECK(records[1].value == 0.5); // near miss counts, disjoint box doesn't
    }

    SECTION("captioning emits all four metrics") {
        write_text(dir / "gt.jsonl",
                   R"({"sample_id":"a","task":"captioning","caption":"large pleural effusion on left side"})" "\n"
                   R"({"sample_id":"b","task":"captioning","caption":"normal cardiac silhouette without acute edema"})" "\n");
        write_text(dir / "preds.jsonl",
                   R"({"sample_id":"a","task":"captioning","caption":"large pleural effusion on left side"})" "\n"
                   R"({"sample_id":"b","task":"captioning","caption":"normal cardiac silhouette without acute edema"})" "\n");
        ScoreConfig config;
        config.predictions = dir / "preds.jsonl";
        config.ground_truth = dir / "gt.jsonl";
        config.task = Task::captioning;
        config.dataset = "demo_xray";
        const std::vector<MetricRecord> records = cmd_score(registry, config);
        REQUIRE(records.size() == 4);
        CHECK(records[0].metric_name == "bleu");
        CHECK(records[0].value == 1.0);
        CHECK(records[1].metric_name == "rouge_l");
        CHECK(records[1].value == 1.0);
        CHECK(records[2].metric_name == "cider");
        CHECK_THAT(records[2].value, Catch::Matchers::WithinAbs(1.0, 1e-12));
        CHECK(records[3].metric_name == "cider_scaled");
        CHECK_THAT(records[3].value, Catch::Matchers::WithinAbs(10.0, 1e-11));
    }
}

TEST_CASE("scoring rejects mismatched tasks and unknown conditions") {
    const fs::path dir = temp_dir("score_bad");
    const PerturbationRegistry registry = PerturbationRegistry::standard();
    write_text(dir / "gt.jsonl",
               R"({"sample_id":"a","task":"vqa","answer":"b"})" "\n");
    ScoreConfig config;
    config.ground_truth = dir / "gt.jsonl";
    config.task = Task::vqa;
    config.dataset = "d";

    SECTION("prediction task differs from the requested task") {
        write_text(dir / "preds.jsonl",
                   R"({"sample_id":"a","task":"captioning","caption":"x"})" "\n");
        config.predictions = dir / "preds.jsonl";
        CHECK_THROWS_AS(cmd_score(registry, config), ValidationError);
    }
    SECTION("unknown perturbation id on a prediction") {
        write_text(dir / "preds.jsonl",
                   R"({"sample_id":"a","task":"vqa","answer":"b"})" "\n"
                   R"({"sample_id":"a","task":"vqa","answer":"b","perturbation_id":"sharpen","level":1})" "\n");
        config.predictions = dir / "preds.jsonl";
        CHECK_THROWS_AS(cmd_score(registry, config), std::invalid_argument);
    }
    SECTION("no ground truth for the task") {
        write_text(dir / "preds.jsonl",
                   R"({"sample_id":"a","task":"vqa","answer":"b"})" "\n");
        config.predictions = dir / "preds.jsonl";
        config.task = Task::vqa;
        write_text(dir / "gt.jsonl",
                   R"({"sample_id":"a","task":"captioning","caption":"x"})" "\n");
        CHECK_THROWS_AS(cmd_score(registry, config), ValidationError);
    }
    SECTION("missing clean predictions warns") {
        write_text(dir / "preds.jsonl",
                   R"({"sample_id":"a","task":"vqa","answer":"b","perturbation_id":"brightness","level":1})" "\n");
        config.predictions = dir / "preds.jsonl";
        Warnings warnings;
        cmd_score(registry, config, &warnings);
        REQUIRE_FALSE(warnings.empty());
        CHECK_THAT(warnings.messages.front(),
                   Catch::Matchers::ContainsSubstring("no clean predictions"));
    }
}

TEST_CASE("report command merges record files") {
    const fs::path dir = temp_dir("report_merge");
    const auto rec = [](const std::string& model, const std::string& pert,
                        const std::string& category, int level, double value) {
        MetricRecord r;
        r.model = model;
        r.strategy = "zero_shot";
        r.dataset = "d1";
        r.task = "segmentation";
        r.perturbation_id = pert;
        r.category = category;
        r.level = level;
        r.value = value;
        r.metric_name = "dice";
        return r;
    };
    write_records_csv({rec("alpha", "clean", "clean", 0, 0.9),
                       rec("alpha", "gaussian_noise", "base", 2, 0.85)},
                      dir / "alpha.csv");
    write_records_csv({rec("beta", "clean", "clean", 0, 0.8),
                       rec("beta", "gaussian_noise", "base", 2, 0.7)},
                      dir / "beta.csv");

    cmd_report({dir / "alpha.csv", dir / "beta.csv"}, dir / "rep");

    const std::string table = slurp(dir / "rep/robustness_table_dice.csv");
    CHECK_THAT(table, Catch::Matchers::ContainsSubstring("alpha,zero_shot,0.050"));
    CHECK_THAT(table, Catch::Matchers::ContainsSubstring("beta,zero_shot,0.100"));
    CHECK(read_records_csv(dir / "rep/records.csv").size() == 4);

    const nlohmann::json doc = nlohmann::json::parse(slurp(dir / "rep/report_dice.json"));
    CHECK(doc["strategy_ranking"][0]["model"] == "beta");

    // A records file whose perturbed rows have no baseline is an input defect.
    write_records_csv({rec("gamma", "speckle", "base", 1, 0.5)}, dir / "orphan.csv");
    CHECK_THROWS_AS(cmd_report({dir / "orphan.csv"}, dir / "rep2"), ValidationError);
    CHECK_THROWS_AS(cmd_report({}, dir / "rep3"), ValidationError);
    CHECK_THROWS_AS(cmd_report({dir / "missing.csv"}, dir / "rep4"), ValidationError);
}

TEST_CASE("cli drives the full workflow") {
    const fs::path dir = temp_dir("cli_flow");
    save_image(medperturb::testing::textured_probe(91, 32, 32), dir / "s1.png");
    {
        nlohmann::json doc;
        doc["dataset_id"] = "demo_xray";
        doc["modality"] = "XRay";
        doc["samples"] = nlohmann::json::array(
            {{{"sample_id", "s1"}, {"image_path", (dir / "s1.png").generic_string()}}});
        write_text(dir / "manifest.json", doc.dump(2));
    }

    CHECK(run_cli("validate-manifest --manifest " + (dir / "manifest.json").string()) == 0);

    CHECK(run_cli("calibrate --manifest " + (dir / "manifest.json").string() + " --cache " +
                  (dir / "cache.json").string() +
                  " --perturbations gaussian_noise --levels 2") == 0);
    CHECK(fs::exists(dir / "cache.json"));

    CHECK(run_cli("perturb --manifest " + (dir / "manifest.json").string() + " --cache " +
                  (dir / "cache.json").string() + " --out " + (dir / "out").string() +
                  " --perturbations gaussian_noise --levels 2") == 0);
    CHECK(fs::exists(dir / "out/demo_xray/gaussian_noise/2/s1.png"));
    CHECK(fs::exists(dir / "out/demo_xray/ledger.csv"));

    save_image(medperturb::testing::disk_mask(32, 32, 10, 10, 6), dir / "gt_a.png");
    save_image(medperturb::testing::disk_mask(32, 32, 14, 14, 6), dir / "pred_shift.png");
    write_text(dir / "gt.jsonl",
               R"({"sample_id":"a","task":"segmentation","mask":"gt_a.png"})" "\n");
    write_text(dir / "preds.jsonl",
               R"({"sample_id":"a","task":"segmentation","mask":"gt_a.png"})" "\n"
               R"({"sample_id":"a","task":"segmentation","perturbation_id":"gaussian_noise","level":2,"mask":"pred_shift.png"})" "\n");
    CHECK(run_cli("score --predictions " + (dir / "preds.jsonl").string() + " --ground-truth " +
                  (dir / "gt.jsonl").string() +
                  " --task segmentation --dataset demo_xray --out " +
                  (dir / "records.csv").string()) == 0);
    CHECK(fs::exists(dir / "records.csv"));

    CHECK(run_cli("report --records " + (dir / "records.csv").string() + " --out " +
                  (dir / "rep").string()) == 0);
    CHECK(fs::exists(dir / "rep/records.csv"));
    CHECK(fs::exists(dir / "rep/report_mask_iou.json"));
    CHECK(fs::exists(dir / "rep/report_mask_dice.json"));
    CHECK(fs::exists(dir / "rep/robustness_table_mask_iou.csv"));
}

TEST_CASE("cli maps failures to exit codes") {
    const fs::path dir = temp_dir("cli_codes");
    SECTION("manifest referencing missing files fails validation") {
        nlohmann::json doc;
        doc["dataset_id"] = "d";
        doc["modality"] = "CT";
        doc["samples"] = nlohmann::json::array(
            {{{"sample_id", "s1"}, {"image_path", (dir / "missing.png").generic_string()}}});
        write_text(dir / "manifest.json", doc.dump(2));
        CHECK(run_cli("validate-manifest --manifest " + (dir / "manifest.json").string()) == 1);
    }
    SECTION("unknown task is a validation error") {
        write_text(dir / "x.jsonl", "");
        CHECK(run_cli("score --predictions " + (dir / "x.jsonl").string() + " --ground-truth " +
                      (dir / "x.jsonl").string() + " --task detection --dataset d --out " +
                      (dir / "r.csv").string()) == 1);
    }
    SECTION("missing records file is a validation error") {
        CHECK(run_cli("report --records " + (dir / "nope.csv").string() + " --out " +
                      (dir / "rep").string()) == 1);
    }
    SECTION("unwritable output root is a runtime error") {
        save_image(medperturb::testing::textured_probe(5, 16, 16), dir / "s1.png");
        nlohmann::json doc;
        doc["dataset_id"] = "d";
        doc["modality"] = "CT";
        doc["samples"] = nlohmann::json::array(
            {{{"sample_id", "s1"}, {"image_path", (dir / "s1.png").generic_string()}}});
        write_text(dir / "manifest.json", doc.dump(2));
        write_text(dir / "blocker", "not a directory");
        CHECK(run_cli("perturb --manifest " + (dir / "manifest.json").string() + " --out " +
                      (dir / "blocker/out").string() +
                      " --perturbations brightness --levels 1") == 2);
    }
    SECTION("missing required options fail parsing") {
        CHECK(run_cli("perturb") == 1);
        CHECK(run_cli("") == 1);
    }
}
