#include "bnrl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bnrl/baseline.hpp"
#include "bnrl/csv.hpp"
#include "bnrl/persistence.hpp"
#include "bnrl/random.hpp"

namespace bnrl {
namespace fs = std::filesystem;

namespace {

std::string format_double(double x) {
  std::ostringstream out;
  out.precision(17);
  out << x;
  return out.str();
}

std::string format_short(double x) {
  std::ostringstream out;
  out << x;
  return out.str();
}

std::string optional_text(const std::optional<double>& x) { return x ? format_double(*x) : std::string(); }

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw Error("'" + key + "' must be true or false");
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty()) return path;
  const fs::path p(path);
  if (p.is_absolute()) return p.lexically_normal().string();
  return fs::absolute(fs::path(base_dir) / p).lexically_normal().string();
}

std::vector<std::string> resolve_list(const std::string& value, const std::string& base_dir) {
  std::vector<std::string> out;
  for (const auto& item : csv::split_list(value)) out.push_back(resolve(item, base_dir));
  return out;
}

template <class T>
std::string join(const std::vector<T>& xs, const auto& fmt) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + fmt(xs[i]);
  return s;
}

void apply_key(RunConfig& c, const std::string& key, const std::string& value, const std::string& base_dir) {
  auto& s = c.sampler;
  const auto integer = [&] { return static_cast<int>(csv::parse_integer(value, key)); };
  if (key == "profiles") {
    c.profiles = resolve_list(value, base_dir);
  } else if (key == "networks") {
    c.networks = resolve_list(value, base_dir);
  } else if (key == "truth") {
    c.truth = resolve(value, base_dir);
  } else if (key == "string_fields") {
    c.string_fields = csv::split_list(value);
  } else if (key == "modes") {
    c.modes.clear();
    for (const auto& item : csv::split_list(value)) c.modes.push_back(model_mode_from_string(item));
  } else if (key == "K") {
    c.K.clear();
    for (const auto& item : csv::split_list(value)) c.K.push_back(static_cast<int>(csv::parse_integer(item, key)));
  } else if (key == "anchor_fractions") {
    c.anchor_fractions.clear();
    for (const auto& item : csv::split_list(value)) c.anchor_fractions.push_back(csv::parse_double(item, key));
  } else if (key == "anchor_seed") {
    c.anchor_seed = static_cast<std::uint64_t>(csv::parse_integer(value, key));
  } else if (key == "iterations") {
    s.iterations = integer();
  } else if (key == "burn_in") {
    s.burn_in = integer();
  } else if (key == "thin") {
    s.thin = integer();
  } else if (key == "R") {
    s.R = integer();
  } else if (key == "step_u") {
    s.step_u = csv::parse_double(value, key);
  } else if (key == "step_beta") {
    s.step_beta = csv::parse_double(value, key);
  } else if (key == "adapt_window") {
    s.adapt_window = integer();
  } else if (key == "target_accept_scalar") {
    s.target_accept_scalar = csv::parse_double(value, key);
  } else if (key == "target_accept_vector") {
    s.target_accept_vector = csv::parse_double(value, key);
  } else if (key == "adapt") {
    s.adapt = parse_bool(value, key);
  } else if (key == "seed") {
    s.seed = static_cast<std::uint64_t>(csv::parse_integer(value, key));
  } else if (key == "linkage_ratio") {
    if (value == "full")
      s.network_only_linkage_ratio = false;
    else if (value == "network_only")
      s.network_only_linkage_ratio = true;
    else
      throw Error("'linkage_ratio' must be full or network_only");
  } else if (key == "fresh_latents") {
    s.fresh_latents = fresh_latents_from_string(value);
  } else if (key == "fresh_position_scale") {
    s.fresh_position_scale = csv::parse_double(value, key);
  } else if (key == "linkage_warmup") {
    s.linkage_warmup = csv::parse_double(value, key);
  } else if (key == "store_pointwise") {
    s.store_pointwise = parse_bool(value, key);
  } else if (key == "estimator") {
    c.estimator = point_estimator_from_string(value);
  } else if (key == "loss_ratio") {
    c.loss_ratio = csv::parse_double(value, key);
  } else if (key == "criteria_units") {
    c.criteria_units = unit_subset_from_string(value);
  } else if (key == "baseline") {
    c.baseline = parse_bool(value, key);
  } else if (key == "baseline_cutoff") {
    c.baseline_cutoff = csv::parse_double(value, key);
  } else if (key == "output") {
    c.output = resolve(value, base_dir);
  } else if (key == "threads") {
    c.threads = integer();
  } else if (key == "write_samples") {
    c.write_samples = parse_bool(value, key);
  } else if (key.rfind("hyper.", 0) == 0) {
    const std::string sub = key.substr(6);
    if (sub == "K") throw Error("set K with the top-level 'K' list, not hyper.K");
    c.hyper_text += sub + " = " + value + "\n";
  } else {
    throw Error("unknown config key '" + key + "'");
  }
}

std::string cell_name(ModelMode mode, int K, double fraction) {
  return to_string(mode) + "_K" + std::to_string(K) + "_a" + format_short(fraction);
}

// Lowest per-sample share of anchor pairs that are co-assigned.
std::optional<double> anchored_recall_in_samples(const Dataset& data, const std::vector<std::vector<int>>& samples,
                                                 const RecordPairs& anchors) {
  if (anchors.empty() || samples.empty()) return std::nullopt;
  double lowest = 1.0;
  for (const auto& labels : samples) {
    int hit = 0;
    for (const auto& [a, b] : anchors.pairs) hit += labels[data.global_index(a)] == labels[data.global_index(b)];
    lowest = std::min(lowest, static_cast<double>(hit) / anchors.size());
  }
  return lowest;
}

CellResult run_cell(const RunConfig& config, const Dataset& data, const RecordPairs* truth, ModelMode mode, int K,
                    double fraction) {
  CellResult r;
  r.name = cell_name(mode, K, fraction);
  r.mode = mode;
  r.K = K;
  r.anchor_fraction = fraction;
  r.seed = derive_seed(config.sampler.seed, fnv1a(r.name));
  try {
    const fs::path dir = fs::path(config.output) / r.name;
    fs::create_directories(dir);
    if (mode != ModelMode::PM && !data.has_networks()) throw Error("mode " + to_string(mode) + " needs networks");
    const HyperParams hyper = parse_hyperparams(config.hyper_text + "K = " + std::to_string(K) + "\n", data);
    SamplerConfig sc = config.sampler;
    sc.seed = r.seed;
    sc.likelihood = switches_for(mode);
    RecordPairs anchors;
    if (fraction > 0.0) {
      if (!truth) throw Error("anchor fractions above 0 need a truth file");
      anchors = draw_anchors(*truth, fraction, config.anchor_seed);
    }
    r.anchors = static_cast<int>(anchors.size());

    const ChainResult chain = run_chain(data, hyper, sc, anchors);
    const auto& samples = chain.samples;
    const auto table = match_probabilities(data, samples.linkage);
    PosteriorLinkage estimate;
    if (config.estimator == PointEstimator::Binder) {
      BinderOptions options;
      options.loss_ratio = config.loss_ratio;
      estimate = binder_point_estimate(table, options);
    } else {
      estimate = mpmms_point_estimate(data, samples.linkage);
    }
    r.approximate = estimate.approximate;
    r.predicted_pairs = static_cast<int>(estimate.pairs.size());
    r.population = population_size_posterior(samples.linkage);
    if (samples.pointwise.samples() >= 2) r.criteria = information_criteria(samples.pointwise, config.criteria_units, K);
    if (truth) r.metrics = precision_recall_f1(confusion(estimate.pairs, *truth, data));
    r.anchored_recall = recall_on(estimate.pairs, anchors);
    r.anchored_recall_samples = anchored_recall_in_samples(data, samples.linkage, anchors);
    r.acceptance = samples.acceptance;

    write_match_probabilities((dir / "match_probabilities.csv").string(), table);
    write_record_pairs((dir / "estimate.csv").string(), estimate.pairs);
    write_record_pairs((dir / "anchors.csv").string(), anchors);
    write_traces_csv((dir / "traces.csv").string(), samples.traces);
    if (config.write_samples) write_linkage_samples((dir / "linkage_samples.txt").string(), samples.linkage);
    if (sc.store_pointwise)
      write_pointwise_csv((dir / "pointwise.csv").string(), samples.pointwise_rows, samples.pointwise.network_units());

    nlohmann::ordered_json j;
    j["cell"] = r.name;
    j["mode"] = to_string(mode);
    j["K"] = K;
    j["anchor_fraction"] = fraction;
    j["seed"] = r.seed;
    j["estimator"] = to_string(estimate.estimator);
    j["approximate_estimate"] = estimate.approximate;
    j["hyperparameters"] = format_hyperparams(hyper, data);
    j["acceptance"] = samples.acceptance;
    j["final_step_u"] = chain.diagnostics.final_steps.u;
    j["final_step_beta"] = chain.diagnostics.final_steps.beta;
    auto& traces = j["traces"];
    for (const auto& t : chain.diagnostics.traces) traces[t.name] = {{"mean", t.mean}, {"sd", t.sd}, {"ess", t.ess}};
    csv::write_file_atomic((dir / "cell.json").string(), j.dump(2) + "\n");
    r.ok = true;
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

}  // namespace

std::string to_string(ModelMode mode) {
  switch (mode) {
    case ModelMode::PM:
      return "PM";
    case ModelMode::NetworkOnly:
      return "NetworkOnly";
    default:
      return "PNM";
  }
}

ModelMode model_mode_from_string(const std::string& text) {
  if (text == "PM") return ModelMode::PM;
  if (text == "PNM") return ModelMode::PNM;
  if (text == "NetworkOnly") return ModelMode::NetworkOnly;
  throw Error("unknown mode '" + text + "' (expected PM, PNM or NetworkOnly)");
}

LikelihoodSwitches switches_for(ModelMode mode) {
  switch (mode) {
    case ModelMode::PM:
      return {false, true};
    case ModelMode::NetworkOnly:
      return {true, false};
    default:
      return {true, true};
  }
}

RunConfig RunConfig::parse(const std::string& text, const std::string& base_dir) {
  RunConfig c;
  const auto entries = csv::parse_key_values(text);
  for (const auto& [key, value] : entries) {
    if (key != "dataset") continue;
    const std::string path = resolve(value, base_dir);
    const std::string dir = fs::path(path).parent_path().string();
    for (const auto& [k, v] : csv::parse_key_values(csv::read_file(path))) {
      if (k != "profiles" && k != "networks" && k != "truth" && k != "string_fields")
        throw Error("dataset file '" + path + "' may only set profiles, networks, truth and string_fields");
      apply_key(c, k, v, dir);
    }
  }
  for (const auto& [key, value] : entries) {
    if (key == "dataset") continue;
    apply_key(c, key, value, base_dir);
  }
  if (c.output.empty()) c.output = resolve("bnrl_run", base_dir);
  if (!fs::path(c.output).is_absolute()) c.output = resolve(c.output, base_dir);
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  const std::string dir = fs::path(path).parent_path().string();
  return parse(csv::read_file(path), dir.empty() ? "." : dir);
}

std::string RunConfig::to_text() const {
  const auto id = [](const std::string& s) { return s; };
  std::ostringstream out;
  out << "profiles = " << join(profiles, id) << '\n';
  if (!networks.empty()) out << "networks = " << join(networks, id) << '\n';
  if (!truth.empty()) out << "truth = " << truth << '\n';
  if (!string_fields.empty()) out << "string_fields = " << join(string_fields, id) << '\n';
  out << "modes = " << join(modes, [](ModelMode m) { return to_string(m); }) << '\n';
  out << "K = " << join(K, [](int k) { return std::to_string(k); }) << '\n';
  out << "anchor_fractions = " << join(anchor_fractions, format_double) << '\n';
  out << "anchor_seed = " << anchor_seed << '\n';
  out << "iterations = " << sampler.iterations << '\n';
  out << "burn_in = " << sampler.burn_in << '\n';
  out << "thin = " << sampler.thin << '\n';
  out << "R = " << sampler.R << '\n';
  out << "step_u = " << format_double(sampler.step_u) << '\n';
  out << "step_beta = " << format_double(sampler.step_beta) << '\n';
  out << "adapt_window = " << sampler.adapt_window << '\n';
  out << "target_accept_scalar = " << format_double(sampler.target_accept_scalar) << '\n';
  out << "target_accept_vector = " << format_double(sampler.target_accept_vector) << '\n';
  out << "adapt = " << (sampler.adapt ? "true" : "false") << '\n';
  out << "seed = " << sampler.seed << '\n';
  out << "linkage_ratio = " << (sampler.network_only_linkage_ratio ? "network_only" : "full") << '\n';
  out << "fresh_latents = " << to_string(sampler.fresh_latents) << '\n';
  out << "fresh_position_scale = " << format_double(sampler.fresh_position_scale) << '\n';
  out << "linkage_warmup = " << format_double(sampler.linkage_warmup) << '\n';
  out << "store_pointwise = " << (sampler.store_pointwise ? "true" : "false") << '\n';
  out << "estimator = " << to_string(estimator) << '\n';
  out << "loss_ratio = " << format_double(loss_ratio) << '\n';
  out << "criteria_units = " << to_string(criteria_units) << '\n';
  out << "baseline = " << (baseline ? "true" : "false") << '\n';
  out << "baseline_cutoff = " << format_double(baseline_cutoff) << '\n';
  out << "output = " << output << '\n';
  out << "threads = " << threads << '\n';
  out << "write_samples = " << (write_samples ? "true" : "false") << '\n';
  for (const auto& [k, v] : csv::parse_key_values(hyper_text)) out << "hyper." << k << " = " << v << '\n';
  return out.str();
}

std::string ValidationReport::to_text() const {
  std::ostringstream out;
  for (const auto& [path, digest] : digests) out << "digest " << digest << "  " << path << '\n';
  out << "cells: " << cells << '\n';
  out << "estimated memory per cell: " << (memory_bytes + 1023) / 1024 << " KiB\n";
  if (issues.empty()) {
    out << "no issues\n";
  } else {
    for (const auto& issue : issues) out << "issue: " << issue << '\n';
  }
  return out.str();
}

Dataset load_config_dataset(const RunConfig& config) {
  std::map<std::string, FieldKind> kinds;
  for (const auto& name : config.string_fields) kinds[name] = FieldKind::StringValued;
  return load_dataset(config.profiles, config.networks, kinds);
}

ValidationReport validate(const RunConfig& config) {
  ValidationReport report;
  auto& issues = report.issues;
  if (config.profiles.empty()) issues.push_back("no profile files given ('profiles')");
  if (!config.networks.empty() && config.networks.size() != config.profiles.size())
    issues.push_back("'networks' must list one file per profile file");

  bool files_ok = true;
  std::vector<std::string> paths = config.profiles;
  paths.insert(paths.end(), config.networks.begin(), config.networks.end());
  if (!config.truth.empty()) paths.push_back(config.truth);
  for (const auto& p : paths) {
    if (!fs::is_regular_file(p)) {
      issues.push_back("missing file: " + p);
      files_ok = false;
    } else {
      report.digests.emplace_back(p, file_digest(p));
    }
  }

  if (config.modes.empty()) issues.push_back("'modes' is empty");
  if (config.K.empty()) issues.push_back("'K' is empty");
  for (int k : config.K)
    if (k < 1) issues.push_back("K must be at least 1, got " + std::to_string(k));
  if (config.anchor_fractions.empty()) issues.push_back("'anchor_fractions' is empty");
  for (double f : config.anchor_fractions)
    if (!(f >= 0.0 && f <= 1.0)) issues.push_back("anchor fraction " + format_short(f) + " is outside [0, 1]");
  std::set<std::string> names;
  for (auto m : config.modes)
    for (int k : config.K)
      for (double f : config.anchor_fractions)
        if (!names.insert(cell_name(m, k, f)).second) issues.push_back("duplicate cell " + cell_name(m, k, f));
  report.cells = static_cast<int>(names.size());
  if (config.threads < 1) issues.push_back("threads must be at least 1");
  if (!(config.loss_ratio > 0.0)) issues.push_back("loss_ratio must be positive");
  if (!(config.baseline_cutoff >= 0.0)) issues.push_back("baseline_cutoff must be non-negative");
  try {
    config.sampler.validate();
  } catch (const std::exception& e) {
    issues.push_back(e.what());
  }
  const bool wants_anchors =
      std::any_of(config.anchor_fractions.begin(), config.anchor_fractions.end(), [](double f) { return f > 0.0; });
  if (wants_anchors && config.truth.empty()) issues.push_back("anchor fractions above 0 need 'truth'");
  if (config.baseline && config.truth.empty()) issues.push_back("'baseline' needs 'truth'");

  if (!files_ok || config.profiles.empty()) return report;
  try {
    const Dataset data = load_config_dataset(config);
    if (!data.has_networks()) {
      for (auto m : config.modes)
        if (m != ModelMode::PM) issues.push_back("mode " + to_string(m) + " needs 'networks'");
      if (config.baseline) issues.push_back("'baseline' needs 'networks'");
    }
    if (config.baseline && data.n_files() != 2) issues.push_back("'baseline' needs exactly two files");
    if (!config.truth.empty()) {
      std::vector<int> sizes;
      for (int j = 0; j < data.n_files(); ++j) sizes.push_back(data.file_size(j));
      validate_record_pairs(load_record_pairs(config.truth), sizes);
    }
    for (int k : config.K) {
      if (k >= 1) parse_hyperparams(config.hyper_text + "K = " + std::to_string(k) + "\n", data);
    }
    // Dense adjacency, linkage samples, streaming pointwise stats and the
    // optional stored pointwise matrix.
    const std::size_t I = data.total_records();
    std::size_t dyads = 0, dense = 0;
    for (int j = 0; j < data.n_files() && data.has_networks(); ++j) {
      const std::size_t n = data.file_size(j);
      dense += n * n;
      dyads += n * (n - 1) / 2;
    }
    std::size_t cells = 0;
    for (int l = 0; l < data.n_fields(); ++l) cells += data.observed_cells(l);
    const auto& s = config.sampler;
    const std::size_t stored = s.iterations > s.burn_in ? (s.iterations - s.burn_in) / s.thin : 0;
    const std::size_t units = dyads + cells;
    report.memory_bytes = dense + stored * I * sizeof(int) + units * 4 * sizeof(double) +
                          (s.store_pointwise ? stored * units * sizeof(double) : 0);
  } catch (const std::exception& e) {
    issues.push_back(e.what());
  }
  return report;
}

RecordPairs draw_anchors(const RecordPairs& truth, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error("anchor fraction must lie in [0, 1]");
  std::vector<std::pair<RecordRef, RecordRef>> pairs = truth.pairs;
  for (auto& [a, b] : pairs)
    if (b < a) std::swap(a, b);
  std::sort(pairs.begin(), pairs.end());
  Rng rng(seed);
  for (int i = static_cast<int>(pairs.size()) - 1; i > 0; --i) std::swap(pairs[i], pairs[rng.uniform_int(i + 1)]);
  const auto count = static_cast<std::size_t>(std::lround(fraction * pairs.size()));
  RecordPairs out;
  out.pairs.assign(pairs.begin(), pairs.begin() + count);
  std::sort(out.pairs.begin(), out.pairs.end());
  return out;
}

RunSummary run(const RunConfig& config) {
  const ValidationReport report = validate(config);
  if (!report.ok()) throw Error("invalid configuration:\n" + report.to_text());
  const Dataset data = load_config_dataset(config);
  std::optional<RecordPairs> truth;
  if (!config.truth.empty()) truth = load_record_pairs(config.truth);

  fs::create_directories(config.output);
  RunSummary summary;
  summary.directory = config.output;

  struct Job {
    ModelMode mode;
    int K;
    double fraction;
  };
  std::vector<Job> jobs;
  for (auto m : config.modes)
    for (int k : config.K)
      for (double f : config.anchor_fractions) jobs.push_back({m, k, f});

  summary.cells.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      summary.cells[i] =
          run_cell(config, data, truth ? &*truth : nullptr, jobs[i].mode, jobs[i].K, jobs[i].fraction);
    }
  };
  const int n_threads = std::max(1, std::min<int>(config.threads, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (config.baseline && truth) {
    for (double f : config.anchor_fractions) {
      BaselineResult b;
      b.anchor_fraction = f;
      try {
        const auto anchors = draw_anchors(*truth, f, config.anchor_seed);
        b.anchors = static_cast<int>(anchors.size());
        GreedyOptions options;
        options.cutoff = config.baseline_cutoff;
        const auto predicted = greedy_match(data.networks[0], data.networks[1], anchors, options);
        b.predicted_pairs = static_cast<int>(predicted.size());
        b.metrics = precision_recall_f1(confusion(predicted, *truth, data));
        write_record_pairs((fs::path(config.output) / ("baseline_a" + format_short(f) + ".csv")).string(), predicted);
        b.ok = true;
      } catch (const std::exception& e) {
        b.error = e.what();
      }
      summary.baseline.push_back(b);
    }
  }

  std::ostringstream metrics;
  metrics << "cell,mode,K,anchor_fraction,anchors,seed,status,recall,precision,f1,anchored_recall,"
             "anchored_recall_samples,predicted_pairs,N_mean,N_sd,approximate,error\n";
  std::ostringstream criteria;
  criteria << "cell,mode,K,anchor_fraction,units,n_units,lppd,mean_deviance,p_dic,dic,p_waic,waic\n";
  for (const auto& c : summary.cells) {
    metrics << c.name << ',' << to_string(c.mode) << ',' << c.K << ',' << format_short(c.anchor_fraction) << ','
            << c.anchors << ',' << c.seed << ',' << (c.ok ? "ok" : "failed") << ',' << optional_text(c.metrics.recall)
            << ',' << optional_text(c.metrics.precision) << ',' << optional_text(c.metrics.f1) << ','
            << optional_text(c.anchored_recall) << ',' << optional_text(c.anchored_recall_samples) << ','
            << c.predicted_pairs << ',' << (c.ok ? format_double(c.population.mean) : "") << ','
            << (c.ok ? format_double(c.population.sd) : "") << ',' << (c.approximate ? "true" : "false") << ','
            << csv::escape(c.error) << '\n';
    if (c.criteria) {
      const auto& r = *c.criteria;
      criteria << c.name << ',' << to_string(c.mode) << ',' << c.K << ',' << format_short(c.anchor_fraction) << ','
               << to_string(config.criteria_units) << ',' << r.units << ',' << format_double(r.lppd) << ','
               << format_double(r.mean_deviance) << ',' << format_double(r.p_dic) << ',' << format_double(r.dic)
               << ',' << format_double(r.p_waic) << ',' << format_double(r.waic) << '\n';
    }
  }
  csv::write_file_atomic((fs::path(config.output) / "metrics.csv").string(), metrics.str());
  csv::write_file_atomic((fs::path(config.output) / "criteria.csv").string(), criteria.str());
  if (config.baseline) {
    std::ostringstream out;
    out << "method,anchor_fraction,anchors,status,recall,precision,f1,predicted_pairs,error\n";
    for (const auto& b : summary.baseline) {
      out << "omega_greedy," << format_short(b.anchor_fraction) << ',' << b.anchors << ',' << (b.ok ? "ok" : "failed")
          << ',' << optional_text(b.metrics.recall) << ',' << optional_text(b.metrics.precision) << ','
          << optional_text(b.metrics.f1) << ',' << b.predicted_pairs << ',' << csv::escape(b.error) << '\n';
    }
    csv::write_file_atomic((fs::path(config.output) / "baseline.csv").string(), out.str());
  }
  csv::write_file_atomic((fs::path(config.output) / "run.conf").string(), config.to_text());

  nlohmann::ordered_json manifest;
  manifest["tool"] = "bnrl";
  manifest["config"] = config.to_text();
  auto& digests = manifest["dataset_digests"];
  digests = nlohmann::ordered_json::object();
  for (const auto& [path, digest] : report.digests) digests[path] = digest;
  manifest["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : summary.cells) {
    manifest["cells"].push_back({{"name", c.name},
                                 {"mode", to_string(c.mode)},
                                 {"K", c.K},
                                 {"anchor_fraction", c.anchor_fraction},
                                 {"seed", c.seed},
                                 {"status", c.ok ? "ok" : "failed"},
                                 {"error", c.error},
                                 {"directory", c.name}});
  }
  if (config.baseline) {
    manifest["baseline"] = nlohmann::ordered_json::array();
    for (const auto& b : summary.baseline)
      manifest["baseline"].push_back(
          {{"anchor_fraction", b.anchor_fraction}, {"status", b.ok ? "ok" : "failed"}, {"error", b.error}});
  }
  csv::write_file_atomic((fs::path(config.output) / "manifest.json").string(), manifest.dump(2) + "\n");
  return summary;
}

}  // namespace bnrl
