#include "ood/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "ood/error.hpp"
#include "ood/metrics.hpp"
#include "ood/pipeline.hpp"
#include "ood/synth.hpp"

namespace ood {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return kExitUsage;
    case ErrorCode::kIoError:
      return kExitIo;
    case ErrorCode::kBadMagic:
    case ErrorCode::kTruncatedFile:
    case ErrorCode::kNonFiniteValue:
    case ErrorCode::kEmptyMatrix:
    case ErrorCode::kEmptyVector:
    case ErrorCode::kParseError:
      return kExitFormat;
    case ErrorCode::kDimMismatch:
    case ErrorCode::kLengthMismatch:
      return kExitShape;
    default:
      return kExitData;
  }
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

// Collects everything a run manifest records.
class RunRecord {
 public:
  explicit RunRecord(std::string command) : command_(std::move(command)) {}

  template <typename F>
  auto time(const std::string& stage, F&& f) {
    const auto start = std::chrono::steady_clock::now();
    auto finish = [&] {
      timings_[stage] =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    };
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      finish();
    } else {
      auto result = f();
      finish();
      return result;
    }
  }

  void input(const fs::path& p) { inputs_.push_back(p); }
  void output(const fs::path& p) { outputs_.push_back(p); }

  void write(const CLI::App& sub, const fs::path& manifest_path) const {
    json config = json::object();
    for (const CLI::Option* opt : sub.get_options()) {
      const std::string name = opt->get_single_name();
      if (name.empty() || name == "help") continue;
      const auto& results = opt->results();
      if (!results.empty()) {
        config[name] = results.size() == 1 ? json(results.front()) : json(results);
      } else if (!opt->get_default_str().empty()) {
        config[name] = opt->get_default_str();
      } else {
        config[name] = nullptr;
      }
    }
    json doc = {{"tool", "ood"}, {"version", kToolVersion}, {"command", command_}, {"config", config}};
    json inputs = json::array(), outputs = json::array();
    for (const auto& p : inputs_) inputs.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
    for (const auto& p : outputs_) outputs.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
    doc["inputs"] = inputs;
    doc["outputs"] = outputs;
    doc["timings_ms"] = timings_;
    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + manifest_path.string());
    out << doc.dump(2) << '\n';
  }

 private:
  std::string command_;
  std::vector<fs::path> inputs_;
  std::vector<fs::path> outputs_;
  std::map<std::string, double> timings_;
};

fs::path manifest_for(const fs::path& output) { return fs::path(output.string() + ".manifest.json"); }

struct FitFlags {
  std::size_t k = 7;
  double pca_var = 0.95;
  std::size_t pca_dim = 0;
  std::size_t pca_max = 128;
  std::string clusterer = "louvain";
  std::size_t k_clusters = 0;
  std::uint64_t seed = 0;
  double ridge = 1e-3;
  double resolution = 1.0;
  std::string symmetrization = "union";

  FitConfig to_config() const {
    FitConfig c;
    c.k = k;
    c.pca = pca_dim > 0 ? PcaTarget::fixed(pca_dim) : PcaTarget::fraction(pca_var, pca_max);
    c.clusterer = parse_clusterer(clusterer);
    if (k_clusters > 0) c.kmeans_clusters = k_clusters;
    c.seed = seed;
    c.ridge_scale = ridge;
    c.resolution = resolution;
    c.symmetrization = parse_symmetrization(symmetrization);
    return c;
  }
};

void add_fit_flags(CLI::App* sub, FitFlags& f) {
  sub->add_option("--k", f.k, "Neighbors per node in the KNN graph")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  auto* var = sub->add_option("--pca-var", f.pca_var, "PCA explained-variance fraction in (0, 1]")
                  ->check(CLI::Range(1e-12, 1.0))
                  ->capture_default_str();
  sub->add_option("--pca-dim", f.pca_dim, "Fixed PCA dimension (overrides --pca-var)")
      ->check(CLI::PositiveNumber)
      ->excludes(var);
  sub->add_option("--pca-max", f.pca_max, "Upper bound on PCA dimension")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--clusterer", f.clusterer, "louvain or kmeans")
      ->check(CLI::IsMember({"louvain", "kmeans"}))
      ->capture_default_str();
  sub->add_option("--k-clusters", f.k_clusters,
                  "K-means cluster count; default: the cluster count Louvain finds on the same graph")
      ->check(CLI::PositiveNumber);
  sub->add_option("--seed", f.seed, "Seed for every randomized stage")->capture_default_str();
  sub->add_option("--ridge", f.ridge, "Covariance ridge scale (lambda = ridge * trace(S) / p)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--resolution", f.resolution, "Louvain resolution")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--symmetrization", f.symmetrization, "union or mutual")
      ->check(CLI::IsMember({"union", "mutual"}))
      ->capture_default_str();
}

void check_percentile(double p) {
  if (!(p > 0.0 && p <= 100.0)) throw Error(ErrorCode::kInvalidArgument, "--percentile must lie in (0, 100]");
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dots = item.find("..");
    try {
      if (dots != std::string::npos) {
        const long lo = std::stol(item.substr(0, dots));
        const long hi = std::stol(item.substr(dots + 2));
        if (hi < lo) throw Error(ErrorCode::kInvalidArgument, "empty range '" + item + "'");
        for (long v = lo; v <= hi; ++v) values.push_back(static_cast<double>(v));
      } else {
        std::size_t used = 0;
        values.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kInvalidArgument, "cannot parse value '" + item + "'");
    }
  }
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "--values is empty");
  return values;
}

std::size_t as_count(double v) {
  if (!(v >= 1.0) || v != std::floor(v)) {
    throw Error(ErrorCode::kInvalidArgument, "expected a positive integer, got " + std::to_string(v));
  }
  return static_cast<std::size_t>(v);
}

struct Truth {
  ScoreReport combined;
  LabelVector labels;
};

Truth combine(const ScoreReport& id, const ScoreReport& ood) {
  Truth t;
  for (const auto* r : {&id, &ood}) {
    t.combined.scores.insert(t.combined.scores.end(), r->scores.begin(), r->scores.end());
    t.combined.nearest_cluster.insert(t.combined.nearest_cluster.end(), r->nearest_cluster.begin(),
                                      r->nearest_cluster.end());
    t.combined.is_ood.insert(t.combined.is_ood.end(), r->is_ood.begin(), r->is_ood.end());
  }
  t.labels.assign(id.size(), 0);
  t.labels.insert(t.labels.end(), ood.size(), 1);
  return t;
}

// Inserts config-file values ahead of the user's own flags so that flags
// given on the command line win (every option takes its last value).
std::vector<std::string> expand_config(const std::vector<std::string>& args, CLI::App& app) {
  std::optional<std::string> config_path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (!config_path || rest.empty()) return rest;

  std::ifstream in(*config_path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config " + *config_path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, "config " + *config_path + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kParseError, "config must be a JSON object");

  CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(rest.front());
  } catch (const CLI::OptionNotFound&) {
    return rest;
  }
  // Either a flat object or one keyed by subcommand name.
  const json& values = doc.contains(rest.front()) && doc[rest.front()].is_object() ? doc[rest.front()] : doc;

  std::vector<std::string> injected;
  for (const auto& [key, value] : values.items()) {
    const std::string flag = "--" + key;
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (!opt) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) injected.push_back(flag);
      continue;
    }
    injected.push_back(flag);
    if (value.is_string()) {
      injected.push_back(value.get<std::string>());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
      injected.push_back(joined);
    } else {
      injected.push_back(value.dump());
    }
  }
  std::vector<std::string> out{rest.front()};
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph-based out-of-distribution detection over embedding vectors", "ood"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", kToolVersion);
  app.footer("All subcommands accept --config <file.json>; keys mirror flag names and flags override them.");

  // synth
  MixtureSpec mix;
  std::string ood_mode = "shifted";
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a seeded Gaussian-mixture benchmark");
  synth->add_option("--clusters", mix.cluster_count)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--dim", mix.dim)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--per-cluster", mix.samples_per_cluster)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--center-scale", mix.center_scale)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--within-std", mix.within_std)->check(CLI::NonNegativeNumber)->capture_default_str();
  synth->add_option("--ood-mode", ood_mode)->check(CLI::IsMember({"shifted", "inflated", "uniform"}))->capture_default_str();
  synth->add_option("--ood-magnitude", mix.ood.magnitude)->check(CLI::NonNegativeNumber)->capture_default_str();
  synth->add_option("--ood-samples", mix.ood.samples)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--holdout-per-cluster", mix.holdout_per_cluster, "Extra ID draws written as holdout.oode")
      ->capture_default_str();
  synth->add_option("--seed", mix.seed)->capture_default_str();
  synth->add_option("--out", synth_out, "Output directory")->required();

  // fit
  FitFlags fit_flags;
  std::string fit_id, fit_out, partition_out, edges_out;
  auto* fit_cmd = app.add_subcommand("fit", "Fit PCA, KNN graph, clusters and per-cluster Gaussians");
  fit_cmd->add_option("--id", fit_id, "In-distribution embeddings (OODE or .csv)")->required();
  add_fit_flags(fit_cmd, fit_flags);
  fit_cmd->add_option("--out", fit_out, "Model JSON path")->required();
  fit_cmd->add_option("--partition-out", partition_out, "Cluster id per row as OODL (4294967295 = unclustered)");
  fit_cmd->add_option("--edges-out", edges_out, "KNN graph edge list 'u v w'");

  // calibrate
  std::string cal_model, cal_holdout, cal_out;
  double cal_percentile = 95.0;
  auto* cal = app.add_subcommand("calibrate", "Set the distance threshold from ID scores");
  cal->add_option("--model", cal_model)->required();
  cal->add_option("--holdout", cal_holdout, "ID embeddings used for the percentile (training or holdout)")->required();
  cal->add_option("--percentile", cal_percentile, "Nearest-rank percentile in (0, 100]")->capture_default_str();
  cal->add_option("--out", cal_out, "Calibrated model path")->required();

  // score
  std::string sc_model, sc_input, sc_out;
  double sc_threshold = 0.0;
  auto* sc = app.add_subcommand("score", "Score embeddings against a model (CSV report)");
  sc->add_option("--model", sc_model)->required();
  sc->add_option("--input", sc_input)->required();
  sc->add_option("--threshold", sc_threshold, "Override the model's calibrated threshold")->check(CLI::PositiveNumber);
  sc->add_option("--out", sc_out)->required();

  // eval
  std::string ev_model, ev_id, ev_ood, ev_out;
  auto* ev = app.add_subcommand("eval", "AUROC / AUPR / accuracy of ID vs OOD scores (JSON report)");
  ev->add_option("--model", ev_model)->required();
  ev->add_option("--id", ev_id)->required();
  ev->add_option("--ood", ev_ood)->required();
  ev->add_option("--out", ev_out)->required();

  // ablate
  FitFlags ab_flags;
  std::string ab_sweep, ab_values, ab_id, ab_ood, ab_holdout, ab_calibration, ab_out;
  auto* ab = app.add_subcommand("ablate", "Run a parameter sweep and emit a CSV table");
  ab->add_option("--sweep", ab_sweep, "k | threshold | clusterer | raw-knn")
      ->check(CLI::IsMember({"k", "threshold", "clusterer", "raw-knn"}))
      ->required();
  ab->add_option("--values", ab_values, "Comma list and/or inclusive ranges a..b");
  ab->add_option("--id", ab_id, "ID training embeddings")->required();
  ab->add_option("--ood", ab_ood, "OOD embeddings")->required();
  ab->add_option("--holdout", ab_holdout, "ID evaluation embeddings (default: --id)");
  ab->add_option("--calibration", ab_calibration, "ID embeddings for thresholds (default: --id)");
  add_fit_flags(ab, ab_flags);
  ab->add_option("--out", ab_out, "CSV table path")->required();

  std::vector<std::string> args;
  try {
    args = expand_config(raw_args, app);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << "run 'ood --help' for usage\n";
    return kExitUsage;
  }

  try {
    if (synth->parsed()) {
      mix.ood.mode = parse_ood_mode(ood_mode);
      RunRecord run("synth");
      const fs::path dir(synth_out);
      fs::create_directories(dir);
      const auto data = run.time("generate", [&] { return generate(mix); });
      run.time("write", [&] {
        save_embeddings(data.id, dir / "id.oode");
        save_embeddings(data.ood, dir / "ood.oode");
        save_labels(data.id_labels, dir / "id_labels.oodl");
        run.output(dir / "id.oode");
        run.output(dir / "ood.oode");
        run.output(dir / "id_labels.oodl");
        if (data.id_holdout) {
          save_embeddings(*data.id_holdout, dir / "holdout.oode");
          save_labels(*data.holdout_labels, dir / "holdout_labels.oodl");
          run.output(dir / "holdout.oode");
          run.output(dir / "holdout_labels.oodl");
        }
      });
      run.write(*synth, dir / "manifest.json");
      out << "id: " << data.id.rows() << " x " << data.id.cols() << ", ood: " << data.ood.rows() << " x "
          << data.ood.cols() << " -> " << dir.string() << '\n';
      return kExitOk;
    }

    if (fit_cmd->parsed()) {
      RunRecord run("fit");
      const auto id = run.time("load", [&] { return load_embeddings(fit_id); });
      run.input(fit_id);
      const auto result = run.time("fit", [&] { return fit_detailed(id, fit_flags.to_config()); });
      const auto& meta = result.model.metadata;
      save_model(result.model, fit_out);
      run.output(fit_out);
      if (!partition_out.empty()) {
        LabelVector labels(result.partition.assignment.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
          const auto c = result.partition.assignment[i];
          labels[i] = c == kUnassigned ? 0xFFFFFFFFu : static_cast<std::uint32_t>(c);
        }
        save_labels(labels, partition_out);
        run.output(partition_out);
      }
      if (!edges_out.empty()) {
        export_edge_list(result.graph, edges_out);
        run.output(edges_out);
      }
      run.write(*fit_cmd, manifest_for(fit_out));
      out << "reduced_dim: " << meta.reduced_dim << '\n'
          << "cluster_count: " << meta.cluster_count << '\n'
          << "edge_count: " << meta.edge_count << '\n'
          << "modularity: " << (meta.modularity ? std::to_string(*meta.modularity) : "n/a") << '\n'
          << "isolated_count: " << meta.isolated_count << '\n'
          << "pooled_fallback_count: " << meta.pooled_fallback_count << '\n';
      return kExitOk;
    }

    if (cal->parsed()) {
      check_percentile(cal_percentile);
      RunRecord run("calibrate");
      const auto model = load_model(cal_model);
      const auto holdout = load_embeddings(cal_holdout);
      run.input(cal_model);
      run.input(cal_holdout);
      const auto calibrated = run.time("calibrate", [&] {
        return calibrate_threshold(model, holdout, cal_percentile, fs::path(cal_holdout).filename().string());
      });
      save_model(calibrated, cal_out);
      run.output(cal_out);
      run.write(*cal, manifest_for(cal_out));
      out << "threshold: " << std::setprecision(10) << *calibrated.threshold << " (percentile " << cal_percentile
          << " of " << holdout.rows() << " scores)\n";
      return kExitOk;
    }

    if (sc->parsed()) {
      RunRecord run("score");
      const auto model = load_model(sc_model);
      const auto input = load_embeddings(sc_input);
      run.input(sc_model);
      run.input(sc_input);
      auto report = run.time("score", [&] { return score(model, input); });
      const std::optional<double> threshold = sc_threshold > 0.0 ? std::optional(sc_threshold) : model.threshold;
      if (threshold) report = classify(report, *threshold);
      save_score_report(report, sc_out);
      run.output(sc_out);
      run.write(*sc, manifest_for(sc_out));
      std::size_t flagged = 0;
      for (const auto& f : report.is_ood) flagged += f.value_or(false);
      out << "scored " << report.size() << " rows";
      if (threshold) out << ", " << flagged << " flagged OOD";
      out << '\n';
      return kExitOk;
    }

    if (ev->parsed()) {
      RunRecord run("eval");
      const auto model = load_model(ev_model);
      const auto id = load_embeddings(ev_id);
      const auto ood = load_embeddings(ev_ood);
      run.input(ev_model);
      run.input(ev_id);
      run.input(ev_ood);
      auto sid = run.time("score_id", [&] { return score(model, id); });
      auto sood = run.time("score_ood", [&] { return score(model, ood); });
      EvalReport report = evaluate(sid.scores, sood.scores);
      if (model.threshold) {
        auto t = combine(classify(sid, *model.threshold), classify(sood, *model.threshold));
        report.accuracy_at_threshold = accuracy(t.combined, t.labels);
      }
      std::ofstream f(ev_out, std::ios::trunc);
      if (!f) throw Error(ErrorCode::kIoError, "cannot write " + ev_out);
      f << report.to_json() << '\n';
      f.close();
      run.output(ev_out);
      run.write(*ev, manifest_for(ev_out));
      out << std::setprecision(6) << "auroc: " << report.auroc << "\naupr: " << report.aupr << '\n';
      if (report.accuracy_at_threshold) out << "accuracy: " << *report.accuracy_at_threshold << '\n';
      return kExitOk;
    }

    if (ab->parsed()) {
      RunRecord run("ablate");
      const auto id = load_embeddings(ab_id);
      const auto ood = load_embeddings(ab_ood);
      run.input(ab_id);
      run.input(ab_ood);
      std::optional<EmbeddingMatrix> holdout, calibration;
      if (!ab_holdout.empty()) {
        holdout = load_embeddings(ab_holdout);
        run.input(ab_holdout);
      }
      if (!ab_calibration.empty()) {
        calibration = load_embeddings(ab_calibration);
        run.input(ab_calibration);
      }
      const EmbeddingMatrix& id_eval = holdout ? *holdout : id;
      const EmbeddingMatrix& id_cal = calibration ? *calibration : id;
      const FitConfig base = ab_flags.to_config();

      std::ostringstream table;
      table << std::setprecision(10);
      if (ab_sweep == "k") {
        const auto values = parse_values(ab_values.empty() ? "5,7,11" : ab_values);
        table << "k,cluster_count,edge_count,modularity,auroc,aupr\n";
        double lo = 1.0, hi = 0.0;
        for (double v : values) {
          FitConfig cfg = base;
          cfg.k = as_count(v);
          const auto model = run.time("k=" + std::to_string(cfg.k), [&] { return fit(id, cfg); });
          const auto r = evaluate(score(model, id_eval).scores, score(model, ood).scores);
          table << cfg.k << ',' << model.metadata.cluster_count << ',' << model.metadata.edge_count << ','
                << model.metadata.modularity.value_or(NAN) << ',' << r.auroc << ',' << r.aupr << '\n';
          lo = std::min(lo, r.auroc);
          hi = std::max(hi, r.auroc);
        }
        out << "auroc spread: " << std::setprecision(6) << (hi - lo) << '\n';
      } else if (ab_sweep == "threshold") {
        const auto values = parse_values(ab_values.empty() ? "80,85,90,95,99" : ab_values);
        for (double v : values) check_percentile(v);
        const auto model = run.time("fit", [&] { return fit(id, base); });
        const auto sid = score(model, id_eval);
        const auto sood = score(model, ood);
        table << "percentile,threshold,accuracy,id_flagged,ood_flagged\n";
        double best = -1.0, best_p = 0.0;
        for (double p : values) {
          const auto cm = calibrate_threshold(model, id_cal, p, "sweep");
          const auto cid = classify(sid, *cm.threshold);
          const auto cood = classify(sood, *cm.threshold);
          const auto t = combine(cid, cood);
          const double acc = accuracy(t.combined, t.labels);
          std::size_t fid = 0, food = 0;
          for (const auto& f : cid.is_ood) fid += *f;
          for (const auto& f : cood.is_ood) food += *f;
          table << p << ',' << *cm.threshold << ',' << acc << ',' << double(fid) / cid.size() << ','
                << double(food) / cood.size() << '\n';
          if (acc > best) {
            best = acc;
            best_p = p;
          }
        }
        out << "best accuracy " << std::setprecision(6) << best << " at percentile " << best_p << '\n';
      } else if (ab_sweep == "clusterer") {
        const auto fr = run.time("louvain", [&] { return fit_detailed(id, [&] {
          FitConfig c = base;
          c.clusterer = Clusterer::kLouvain;
          return c;
        }()); });
        FitConfig kc = base;
        kc.clusterer = Clusterer::kKMeans;
        if (!kc.kmeans_clusters) kc.kmeans_clusters = fr.model.metadata.cluster_count;
        const auto km = run.time("kmeans", [&] { return fit(id, kc); });
        table << "clusterer,cluster_count,modularity,auroc,aupr\n";
        double au[2];
        int i = 0;
        for (const auto* m : {&fr.model, &km}) {
          const auto r = evaluate(score(*m, id_eval).scores, score(*m, ood).scores);
          au[i++] = r.auroc;
          table << to_string(m->metadata.config.clusterer) << ',' << m->metadata.cluster_count << ','
                << m->metadata.modularity.value_or(NAN) << ',' << r.auroc << ',' << r.aupr << '\n';
        }
        out << "auroc difference: " << std::setprecision(6) << std::abs(au[0] - au[1]) << '\n';
      } else {
        if (!holdout) {
          throw Error(ErrorCode::kInvalidArgument,
                      "raw-knn needs --holdout: training rows would find themselves at distance 0");
        }
        const auto values = parse_values(ab_values.empty() ? "5,7,9,11,13,15" : ab_values);
        const auto model = run.time("fit", [&] { return fit(id, base); });
        const double pipeline = auroc(score(model, id_eval).scores, score(model, ood).scores);
        table << "k,auroc,aupr,pipeline_auroc\n";
        double best = 0.0;
        for (double v : values) {
          const std::size_t k = as_count(v);
          const auto bid = knn_raw_baseline(id, id_eval, k);
          const auto bood = knn_raw_baseline(id, ood, k);
          const auto r = evaluate(bid, bood);
          table << k << ',' << r.auroc << ',' << r.aupr << ',' << pipeline << '\n';
          best = std::max(best, r.auroc);
        }
        out << "best raw-knn auroc " << std::setprecision(6) << best << ", pipeline auroc " << pipeline << '\n';
      }
      std::ofstream f(ab_out, std::ios::trunc);
      if (!f) throw Error(ErrorCode::kIoError, "cannot write " + ab_out);
      f << table.str();
      f.close();
      run.output(ab_out);
      run.write(*ab, manifest_for(ab_out));
      out << table.str();
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace ood
