// radiomics: command-line front end for the deep radiomics pipeline.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "radiomics/cnn.hpp"
#include "radiomics/error.hpp"
#include "radiomics/pipeline.hpp"
#include "radiomics/synthetic.hpp"

namespace {

radiomics::RunConfig config_for(const std::string& path, const std::string& out_override) {
    radiomics::RunConfig c = path.empty() ? radiomics::RunConfig{} : radiomics::load_config(path);
    if (!out_override.empty()) c.output_dir = out_override;
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deep radiomic features: CNN activation GMMs, random-forest LOOCV and survival analysis"};
    app.require_subcommand(1);

    std::string manifest, weights, config_path, out, features, target, patient, sequence;
    int map_index = 0;
    std::uint64_t seed = 42;
    int patients = 5;
    std::string sequences = "all";

    auto* extract = app.add_subcommand("extract", "Compute the deep radiomic feature matrix");
    extract->add_option("--manifest", manifest, "Cohort manifest CSV")->required();
    extract->add_option("--weights", weights, "CNN weights file")->required();
    extract->add_option("--config", config_path, "Run configuration JSON");
    extract->add_option("--out", out, "Output directory (overrides config output_dir)");

    auto* classify = app.add_subcommand("classify", "LOOCV random forest on a median-split target");
    classify->add_option("--features", features, "features.csv from extract")->required();
    classify->add_option("--manifest", manifest, "Cohort manifest CSV")->required();
    classify->add_option("--target", target, "m1 | neutrophils | tfh | survival")->required();
    classify->add_option("--config", config_path, "Run configuration JSON");
    classify->add_option("--out", out, "Output directory");

    auto* survive = app.add_subcommand("survive", "Kaplan-Meier and log-rank on predicted survival groups");
    survive->add_option("--features", features, "features.csv from extract")->required();
    survive->add_option("--manifest", manifest, "Cohort manifest CSV")->required();
    survive->add_option("--config", config_path, "Run configuration JSON");
    survive->add_option("--out", out, "Output directory");

    auto* inspect = app.add_subcommand("inspect", "Histogram, fitted mixture and slice of one activation map");
    inspect->add_option("--manifest", manifest, "Cohort manifest CSV")->required();
    inspect->add_option("--weights", weights, "CNN weights file")->required();
    inspect->add_option("--patient", patient, "Patient id")->required();
    inspect->add_option("--map", map_index, "Activation map index, 0..20")->required();
    inspect->add_option("--sequence", sequence, "t1wi | t1ce | t2wi | flair (default: first listed)");
    inspect->add_option("--config", config_path, "Run configuration JSON");
    inspect->add_option("--out", out, "Output directory");

    auto* gen = app.add_subcommand("gen-weights", "Write seeded uniform(-0.5, 0.5) test weights");
    gen->add_option("--seed", seed, "PRNG seed");
    gen->add_option("--out", out, "Weights file path")->required();

    auto* synth = app.add_subcommand("synth", "Write a synthetic cohort with planted texture/survival signal");
    synth->add_option("--patients", patients, "Number of patients");
    synth->add_option("--seed", seed, "PRNG seed");
    synth->add_option("--sequences", sequences, "'all' or a single sequence name");
    synth->add_option("--out", out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*extract) {
            const auto config = config_for(config_path, out);
            const auto result = radiomics::cmd_extract(manifest, weights, config, config.output_dir);
            std::cout << "extract: " << result.features.rows.size() << " patients written, " << result.failures.size()
                      << " skipped\n";
            return result.exit_code;
        }
        if (*classify) {
            const auto config = config_for(config_path, out);
            const auto t = radiomics::target_from_string(target);
            const auto outcome = radiomics::cmd_classify(features, manifest, t, config, config.output_dir);
            for (std::size_t i = 0; i < outcome.reports.size(); ++i)
                std::cout << radiomics::to_string(t) << " " << outcome.feature_sets[i] << ": AUC " << outcome.reports[i].auc
                          << " accuracy " << outcome.reports[i].accuracy << "\n";
            return radiomics::kExitOk;
        }
        if (*survive) {
            const auto config = config_for(config_path, out);
            const auto rows = radiomics::cmd_survive(features, manifest, config, config.output_dir);
            for (const auto& r : rows) {
                std::cout << r.feature_set << ": AUC " << r.auc;
                if (r.test) std::cout << " p " << r.test->p_value;
                std::cout << "\n";
            }
            return radiomics::kExitOk;
        }
        if (*inspect) {
            const auto config = config_for(config_path, out);
            const auto r = radiomics::cmd_inspect(manifest, weights, patient, map_index, config, config.output_dir, sequence);
            std::cout << "inspect: " << r.samples.size() << " samples -> " << r.histogram_svg.string() << "\n";
            return radiomics::kExitOk;
        }
        if (*gen) {
            radiomics::save_weights(radiomics::generate_test_weights(seed), out);
            return radiomics::kExitOk;
        }
        if (*synth) {
            radiomics::SyntheticOptions opts;
            opts.patients = patients;
            opts.seed = seed;
            if (sequences != "all") opts.sequences = {radiomics::modality_from_string(sequences)};
            const auto cohort = radiomics::write_synthetic_cohort(out, opts);
            std::cout << "synth: " << cohort.patients.size() << " patients -> " << cohort.manifest_path.string() << "\n";
            return radiomics::kExitOk;
        }
    } catch (const radiomics::Error& e) {
        std::cerr << "radiomics: " << e.what() << "\n";
        return radiomics::kExitFatal;
    } catch (const std::exception& e) {
        std::cerr << "radiomics: " << e.what() << "\n";
        return radiomics::kExitFatal;
    }
    return radiomics::kExitOk;
}
