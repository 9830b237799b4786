// Command-line front end: run, validate, synth, eval, baseline.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bnrl/baseline.hpp"
#include "bnrl/csv.hpp"
#include "bnrl/evaluation.hpp"
#include "bnrl/experiment.hpp"
#include "bnrl/synthetic.hpp"

namespace {

using bnrl::RunConfig;

nlohmann::ordered_json metrics_json(const bnrl::ConfusionCounts& c, const bnrl::LinkageMetrics& m) {
  const auto opt = [](const std::optional<double>& x) { return x ? nlohmann::ordered_json(*x) : nlohmann::ordered_json(); };
  return {{"tp", c.tp},       {"fp", c.fp},           {"fn", c.fn}, {"tn", c.tn},
          {"recall", opt(m.recall)}, {"precision", opt(m.precision)}, {"f1", opt(m.f1)}};
}

std::vector<int> file_sizes(const bnrl::Dataset& data) {
  std::vector<int> sizes;
  for (int j = 0; j < data.n_files(); ++j) sizes.push_back(data.file_size(j));
  return sizes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian record linkage with profile and network data"};
  app.require_subcommand(1);

  std::string config_path, output_override;
  int threads = 0;
  auto* run = app.add_subcommand("run", "Run every (mode, K, anchor fraction) cell of a config");
  run->add_option("config", config_path, "Run config file")->required()->check(CLI::ExistingFile);
  run->add_option("--output", output_override, "Override the output directory");
  run->add_option("--threads", threads, "Override the worker count");

  auto* validate = app.add_subcommand("validate", "Check a config without sampling");
  validate->add_option("config", config_path, "Run config file")->required();

  std::string spec_path, synth_out;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("spec", spec_path, "Synthetic spec file")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_seed, "Override the spec seed");

  std::string predicted_path, truth_path, dataset_path;
  auto* eval = app.add_subcommand("eval", "Compare a predicted linkage CSV with a truth CSV");
  eval->add_option("predicted", predicted_path, "Predicted pairs CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("truth", truth_path, "Truth pairs CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--dataset", dataset_path, "Config or dataset.conf naming the profile files")
      ->required()
      ->check(CLI::ExistingFile);

  std::string anchors_path, baseline_out, baseline_truth;
  double cutoff = 0.95;
  auto* baseline = app.add_subcommand("baseline", "Greedy neighbourhood-overlap matcher for two networks");
  baseline->add_option("--dataset", dataset_path, "Config or dataset.conf with two files and networks")
      ->required()
      ->check(CLI::ExistingFile);
  baseline->add_option("--anchors", anchors_path, "Anchor pairs CSV")->check(CLI::ExistingFile);
  baseline->add_option("--cutoff", cutoff, "Largest score that is still committed");
  baseline->add_option("--out", baseline_out, "Write the predicted pairs here");
  baseline->add_option("--truth", baseline_truth, "Truth CSV for metrics")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      RunConfig config = RunConfig::load(config_path);
      if (!output_override.empty()) config.output = std::filesystem::absolute(output_override).string();
      if (threads > 0) config.threads = threads;
      const auto summary = bnrl::run(config);
      int failed = 0;
      for (const auto& c : summary.cells) {
        std::cout << c.name << ": " << (c.ok ? "ok" : "failed: " + c.error) << '\n';
        failed += c.ok ? 0 : 1;
      }
      std::cout << "outputs in " << summary.directory << '\n';
      return failed == 0 ? 0 : 3;
    }
    if (*validate) {
      const auto report = bnrl::validate(RunConfig::load(config_path));
      std::cout << report.to_text();
      return report.ok() ? 0 : 2;
    }
    if (*synth) {
      auto spec = bnrl::parse_synthetic_spec(bnrl::csv::read_file(spec_path));
      if (synth_seed != 0) spec.seed = synth_seed;
      const auto data = bnrl::generate_synthetic(spec);
      bnrl::write_synthetic(synth_out, data);
      std::cout << "wrote " << data.data.total_records() << " records, " << data.truth.size() << " true pairs to "
                << synth_out << '\n';
      return 0;
    }
    if (*eval) {
      const auto config = RunConfig::load(dataset_path);
      const auto data = bnrl::load_config_dataset(config);
      const auto predicted = bnrl::load_record_pairs(predicted_path);
      const auto truth = bnrl::load_record_pairs(truth_path);
      const auto counts = bnrl::confusion(predicted, truth, data);
      std::cout << metrics_json(counts, bnrl::precision_recall_f1(counts)).dump(2) << '\n';
      return 0;
    }
    if (*baseline) {
      const auto config = RunConfig::load(dataset_path);
      const auto data = bnrl::load_config_dataset(config);
      if (data.n_files() != 2 || !data.has_networks()) throw bnrl::Error("baseline needs two files with networks");
      bnrl::RecordPairs anchors;
      if (!anchors_path.empty()) anchors = bnrl::load_record_pairs(anchors_path);
      bnrl::GreedyOptions options;
      options.cutoff = cutoff;
      const auto predicted = bnrl::greedy_match(data.networks[0], data.networks[1], anchors, options);
      if (!baseline_out.empty()) bnrl::write_record_pairs(baseline_out, predicted);
      nlohmann::ordered_json out;
      out["method"] = "omega_greedy";
      out["anchors"] = anchors.size();
      out["predicted_pairs"] = predicted.size();
      if (!baseline_truth.empty()) {
        const auto truth = bnrl::load_record_pairs(baseline_truth);
        bnrl::validate_record_pairs(truth, file_sizes(data));
        const auto counts = bnrl::confusion(predicted, truth, data);
        out["metrics"] = metrics_json(counts, bnrl::precision_recall_f1(counts));
      }
      std::cout << out.dump(2) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
