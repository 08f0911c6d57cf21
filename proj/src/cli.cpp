#include "gse/cli.hpp"

#include "gse/csv.hpp"
#include "gse/errors.hpp"
#include "gse/eval.hpp"
#include "gse/model.hpp"
#include "gse/model_io.hpp"
#include "gse/parallel.hpp"
#include "gse/svg.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace gse {

namespace {

using nlohmann::json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::uint64_t fnv64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw InvalidConfig("config field '" + field + "': " + why);
}

void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& scope) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      bad_field(scope + it.key(), "unknown key");
    }
  }
}

double num_field(const json& j, const std::string& key, const std::string& scope, double fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number()) bad_field(scope + key, "expected a number");
  return v.get<double>();
}

Index int_field(const json& j, const std::string& key, const std::string& scope, Index fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer()) bad_field(scope + key, "expected an integer");
  return Index(v.get<long long>());
}

std::uint64_t seed_field(const json& j, const std::string& key, const std::string& scope,
                         std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                 v.get<long long>() < 0)) {
    bad_field(scope + key, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

bool bool_field(const json& j, const std::string& key, const std::string& scope, bool fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_boolean()) bad_field(scope + key, "expected true or false");
  return v.get<bool>();
}

std::string str_field(const json& j, const std::string& key, const std::string& scope,
                      const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_string()) bad_field(scope + key, "expected a string");
  return v.get<std::string>();
}

ManifoldSpec parse_manifold(const json& v) {
  ManifoldSpec spec;
  if (v.is_string()) {
    spec.name = v.get<std::string>();
    return spec;
  }
  if (!v.is_object()) bad_field("manifold", "expected a name or an object");
  check_keys(v, {"name", "q", "p", "seed", "domain"}, "manifold.");
  spec.name = str_field(v, "name", "manifold.", spec.name);
  spec.q = int_field(v, "q", "manifold.", spec.q);
  spec.p = int_field(v, "p", "manifold.", spec.p);
  spec.seed = seed_field(v, "seed", "manifold.", spec.seed);
  if (v.contains("domain")) {
    const json& d = v.at("domain");
    if (!d.is_array() || d.empty()) bad_field("manifold.domain", "expected [[lo,hi], ...]");
    spec.domain.resize(Index(d.size()), 2);
    for (Index r = 0; r < spec.domain.rows(); ++r) {
      const json& row = d.at(std::size_t(r));
      if (!row.is_array() || row.size() != 2 || !row.at(0).is_number() || !row.at(1).is_number()) {
        bad_field("manifold.domain", "row " + std::to_string(r + 1) + " is not [lo, hi]");
      }
      spec.domain(r, 0) = row.at(0).get<double>();
      spec.domain(r, 1) = row.at(1).get<double>();
      if (!(spec.domain(r, 0) < spec.domain(r, 1))) {
        bad_field("manifold.domain", "row " + std::to_string(r + 1) + " needs lo < hi");
      }
    }
  }
  return spec;
}

HyperParams parse_params(const json& v) {
  HyperParams hp;
  if (!v.is_object()) bad_field("params", "expected an object");
  check_keys(v,
             {"q", "variant", "eps1", "eps2", "eps3", "eps3_rel", "eps4", "ogse_max_iter",
              "ogse_tol", "v_cutoff", "dense_eig_limit", "reconstruct_via_field"},
             "params.");
  hp.q = int_field(v, "q", "params.", hp.q);
  if (v.contains("variant")) hp.variant = variant_from_string(str_field(v, "variant", "params.", ""));
  hp.eps1 = num_field(v, "eps1", "params.", hp.eps1);
  hp.eps2 = num_field(v, "eps2", "params.", hp.eps2);
  hp.eps3 = num_field(v, "eps3", "params.", hp.eps3);
  hp.eps3_rel = num_field(v, "eps3_rel", "params.", hp.eps3_rel);
  hp.eps4 = num_field(v, "eps4", "params.", hp.eps4);
  hp.ogse_max_iter = int(int_field(v, "ogse_max_iter", "params.", hp.ogse_max_iter));
  hp.ogse_tol = num_field(v, "ogse_tol", "params.", hp.ogse_tol);
  hp.v_cutoff = num_field(v, "v_cutoff", "params.", hp.v_cutoff);
  hp.dense_eig_limit = int_field(v, "dense_eig_limit", "params.", hp.dense_eig_limit);
  hp.reconstruct_via_field =
      bool_field(v, "reconstruct_via_field", "params.", hp.reconstruct_via_field);
  return hp;
}

RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw InvalidConfig("config root must be a JSON object");
  check_keys(j,
             {"manifold", "n_train", "n_test", "train_seed", "test_seed", "params", "sweep",
              "out_dir", "plot"},
             "");
  RunConfig cfg;
  if (j.contains("manifold")) cfg.manifold = parse_manifold(j.at("manifold"));
  cfg.n_train = int_field(j, "n_train", "", cfg.n_train);
  cfg.n_test = int_field(j, "n_test", "", cfg.n_test);
  cfg.train_seed = seed_field(j, "train_seed", "", cfg.train_seed);
  cfg.test_seed = seed_field(j, "test_seed", "", cfg.test_seed);
  if (j.contains("params")) cfg.params = parse_params(j.at("params"));
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    if (!s.is_array()) bad_field("sweep", "expected an array of sample sizes");
    for (const json& e : s) {
      if (!e.is_number_integer() || e.get<long long>() < 1) {
        bad_field("sweep", "entries must be positive integers");
      }
      cfg.sweep.push_back(Index(e.get<long long>()));
    }
  }
  cfg.out_dir = str_field(j, "out_dir", "", cfg.out_dir);
  cfg.plot = bool_field(j, "plot", "", cfg.plot);
  return cfg;
}

/// Same generator with a different parameter box (CLI domain override).
class BoxOverride final : public Manifold {
 public:
  BoxOverride(std::unique_ptr<Manifold> base, Matrix box)
      : base_(std::move(base)), box_(std::move(box)) {}

  std::string name() const override { return base_->name(); }
  Index q() const override { return base_->q(); }
  Index p() const override { return base_->p(); }
  Matrix domain() const override { return box_; }
  Vector chart(const Vector& b) const override { return base_->chart(b); }
  Matrix chart_jacobian(const Vector& b) const override { return base_->chart_jacobian(b); }

 private:
  std::unique_ptr<Manifold> base_;
  Matrix box_;
};

json effective_json(const RunConfig& cfg) {
  json m;
  m["name"] = cfg.manifold.name;
  m["q"] = cfg.manifold.q;
  m["p"] = cfg.manifold.p;
  m["seed"] = cfg.manifold.seed;
  if (cfg.manifold.domain.size() > 0) {
    json d = json::array();
    for (Index r = 0; r < cfg.manifold.domain.rows(); ++r) {
      d.push_back({cfg.manifold.domain(r, 0), cfg.manifold.domain(r, 1)});
    }
    m["domain"] = d;
  }
  json p;
  p["q"] = cfg.params.q;
  p["variant"] = to_string(cfg.params.variant);
  p["eps1"] = cfg.params.eps1;
  p["eps2"] = cfg.params.eps2;
  p["eps3"] = cfg.params.eps3;
  p["eps3_rel"] = cfg.params.eps3_rel;
  p["eps4"] = cfg.params.eps4;
  p["ogse_max_iter"] = cfg.params.ogse_max_iter;
  p["ogse_tol"] = cfg.params.ogse_tol;
  p["v_cutoff"] = cfg.params.v_cutoff;
  p["dense_eig_limit"] = cfg.params.dense_eig_limit;
  p["reconstruct_via_field"] = cfg.params.reconstruct_via_field;
  json j;
  j["manifold"] = m;
  j["n_train"] = cfg.n_train;
  j["n_test"] = cfg.n_test;
  j["train_seed"] = cfg.train_seed;
  j["test_seed"] = cfg.test_seed;
  j["params"] = p;
  j["sweep"] = cfg.sweep;
  j["plot"] = cfg.plot;
  return j;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open '" + tmp + "' for writing");
    out << text;
    if (!out) throw IoError("write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw IoError("cannot rename '" + tmp + "' to '" + path + "'");
  }
}

std::vector<std::string> indexed_header(const std::string& prefix, Index count) {
  std::vector<std::string> h;
  for (Index c = 0; c < count; ++c) h.push_back(prefix + std::to_string(c + 1));
  return h;
}

void write_cloud(const std::string& path, const PointCloud& cloud) {
  std::vector<std::string> header = indexed_header("x", cloud.p());
  for (const std::string& b : indexed_header("b", cloud.coords.cols())) header.push_back(b);
  Matrix data(cloud.n(), cloud.p() + cloud.coords.cols());
  data.leftCols(cloud.p()) = cloud.points;
  if (cloud.coords.cols() > 0) data.rightCols(cloud.coords.cols()) = cloud.coords;
  csv::write(path, header, data);
}

Matrix columns_by_prefix(const csv::Table& t, const std::string& prefix) {
  std::vector<Index> cols = t.prefixed_columns(prefix);
  Matrix m(t.data.rows(), Index(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) m.col(Index(k)) = t.data.col(cols[k]);
  return m;
}

Matrix ambient_columns(const csv::Table& t, const std::string& path) {
  Matrix x = columns_by_prefix(t, "x");
  if (x.cols() == 0) throw DimensionMismatch("'" + path + "' has no x1..xp columns");
  return x;
}

/// 2-D view of a point set for plotting: identity for two columns, value vs
/// row index for one, and a centered top-2 principal projection otherwise.
std::vector<std::pair<double, double>> scatter_2d(const Matrix& m) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(std::size_t(m.rows()));
  if (m.rows() == 0 || m.cols() == 0) return pts;
  if (m.cols() == 1) {
    for (Index r = 0; r < m.rows(); ++r) pts.emplace_back(double(r), m(r, 0));
    return pts;
  }
  if (m.cols() == 2) {
    for (Index r = 0; r < m.rows(); ++r) pts.emplace_back(m(r, 0), m(r, 1));
    return pts;
  }
  Matrix centered = m.rowwise() - m.colwise().mean();
  Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  Matrix proj = centered * svd.matrixV().leftCols(2);
  for (Index r = 0; r < proj.rows(); ++r) pts.emplace_back(proj(r, 0), proj(r, 1));
  return pts;
}

void plot_points(const std::string& path, const std::string& title, const Matrix& m,
                 const std::string& color) {
  svg::Series s;
  s.label = title;
  s.points = scatter_2d(m);
  s.color = color;
  svg::write_chart(path, title, {s}, "component 1", "component 2");
}

Matrix embed_batch(const GseModel& model, const Matrix& x) {
  Matrix y(x.rows(), model.params().q);
  std::vector<std::string> errs(std::size_t(x.rows()));
  std::vector<int> kinds(std::size_t(x.rows()), -1);
  par::for_each_index(x.rows(), [&](Index i) {
    try {
      y.row(i) = model.embed(x.row(i).transpose()).transpose();
    } catch (const Error& e) {
      kinds[std::size_t(i)] = int(e.kind());
      errs[std::size_t(i)] = e.what();
    } catch (const std::exception& e) {
      kinds[std::size_t(i)] = int(ErrorKind::Numeric);
      errs[std::size_t(i)] = e.what();
    }
  });
  for (Index i = 0; i < x.rows(); ++i) {
    if (kinds[std::size_t(i)] >= 0) {
      throw Error(ErrorKind(kinds[std::size_t(i)]),
                  "row " + std::to_string(i + 1) + ": " + errs[std::size_t(i)]);
    }
  }
  return y;
}

Matrix reconstruct_batch(const GseModel& model, const Matrix& y) {
  Matrix x(y.rows(), model.sample_points().cols());
  std::vector<std::string> errs(std::size_t(y.rows()));
  std::vector<int> kinds(std::size_t(y.rows()), -1);
  par::for_each_index(y.rows(), [&](Index i) {
    try {
      x.row(i) = model.reconstruct(y.row(i).transpose()).transpose();
    } catch (const Error& e) {
      kinds[std::size_t(i)] = int(e.kind());
      errs[std::size_t(i)] = e.what();
    } catch (const std::exception& e) {
      kinds[std::size_t(i)] = int(ErrorKind::Numeric);
      errs[std::size_t(i)] = e.what();
    }
  });
  for (Index i = 0; i < y.rows(); ++i) {
    if (kinds[std::size_t(i)] >= 0) {
      throw Error(ErrorKind(kinds[std::size_t(i)]),
                  "row " + std::to_string(i + 1) + ": " + errs[std::size_t(i)]);
    }
  }
  return x;
}

std::string artifact(const RunConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

/// Empty clouds are allowed for the test set (n_test may be zero); the
/// sampler itself insists on n >= 1.
PointCloud sample_or_empty(const Manifold& gen, Index n, std::uint64_t seed) {
  if (n > 0) return sample(gen, n, seed);
  PointCloud cloud;
  cloud.points.resize(0, gen.p());
  cloud.coords.resize(0, gen.q());
  return cloud;
}

void cmd_generate(const RunConfig& cfg) {
  std::unique_ptr<Manifold> gen = cfg.make_generator();
  PointCloud train = sample(*gen, cfg.n_train, cfg.train_seed);
  PointCloud test = sample_or_empty(*gen, cfg.n_test, cfg.test_seed);
  write_cloud(artifact(cfg, "train.csv"), train);
  write_cloud(artifact(cfg, "test.csv"), test);

  json manifest;
  manifest["format_version"] = 1;
  manifest["config"] = effective_json(cfg);
  manifest["generator"] = gen->name();
  manifest["p"] = gen->p();
  manifest["q"] = gen->q();
  manifest["files"] = {"train.csv", "test.csv"};
  write_text_atomic(artifact(cfg, "manifest.json"), manifest.dump(2) + "\n");

  if (cfg.plot) {
    plot_points(artifact(cfg, "train_cloud.svg"),
                "Training sample (" + gen->name() + ", n=" + std::to_string(cfg.n_train) + ")",
                train.points, "#1f6fb2");
  }
  std::cout << "generate: wrote " << cfg.n_train << " training and " << cfg.n_test
            << " test points to " << cfg.out_dir << "\n";
}

GseModel fit_with_hints(const Matrix& x, const HyperParams& params) {
  try {
    return GseModel::fit(x, params);
  } catch (const DisconnectedGraph&) {
    std::cerr << "hint: raise eps1 so every point reaches the rest of the sample\n";
    throw;
  } catch (const SampleOutsideDomain&) {
    std::cerr << "hint: raise eps1 (larger neighborhoods) or lower eps3 (rank threshold)\n";
    throw;
  } catch (const EigensolverFailure&) {
    std::cerr << "hint: check the sample for near-duplicate points or adjust eps1/eps2\n";
    throw;
  }
}

void print_fit_summary(const GseModel& model) {
  const FitSummary& s = model.summary();
  const HyperParams& hp = model.params();
  std::cout << "fit: variant=" << to_string(hp.variant) << " n=" << s.n << " p=" << s.p
            << " q=" << hp.q << "\n"
            << "     eps1=" << csv::format(hp.eps1) << " eps2=" << csv::format(hp.eps2) << "\n"
            << "     alignment residual " << csv::format(s.delta_v) << "\n"
            << "     embedding residual " << csv::format(s.delta_h) << " (tangent part "
            << csv::format(s.delta_h_tangent) << ")\n"
            << "     spectral gap " << csv::format(s.spectral_gap) << "\n";
  if (hp.variant == Variant::Ogse) {
    std::cout << "     orthogonal sweeps " << s.ogse_iterations
              << (s.ogse_converged ? " (converged)" : " (not converged)") << ", dropped term "
              << csv::format(s.ogse_dropped) << "\n";
  }
  for (const std::string& w : s.warnings) std::cout << "     warning: " << w << "\n";
}

void write_fit_summary_csv(const std::string& path, const GseModel& model) {
  const FitSummary& s = model.summary();
  const HyperParams& hp = model.params();
  Matrix row(1, 17);
  row << double(s.n), double(s.p), double(hp.q), hp.variant == Variant::Ogse ? 1.0 : 0.0, hp.eps1,
      hp.eps2, hp.eps3, hp.eps3_rel, s.delta_v, s.delta_h, s.delta_h_tangent, s.spectral_gap,
      double(s.ogse_iterations), s.ogse_converged ? 1.0 : 0.0, s.ogse_dropped,
      double(s.degenerate_frames), double(s.warnings.size());
  csv::write(path,
             {"n", "p", "q", "variant", "eps1", "eps2", "eps3", "eps3_rel", "delta_v", "delta_h",
              "delta_h_tangent", "spectral_gap", "ogse_iterations", "ogse_converged",
              "ogse_dropped", "degenerate_frames", "n_warnings"},
             row);
}

void cmd_fit(const RunConfig& cfg, const std::string& data_path) {
  std::string path = data_path.empty() ? artifact(cfg, "train.csv") : data_path;
  csv::Table t = csv::read(path);
  Matrix x = ambient_columns(t, path);
  GseModel model = fit_with_hints(x, cfg.params);
  save_model(model, artifact(cfg, "model.gsem"), cfg.train_seed, cfg.hash());
  write_fit_summary_csv(artifact(cfg, "fit_summary.csv"), model);
  print_fit_summary(model);
  std::cout << "saved model to " << artifact(cfg, "model.gsem") << "\n";
}

void cmd_embed(const RunConfig& cfg, const std::string& data_path) {
  GseModel model = load_model(artifact(cfg, "model.gsem"));
  std::string path = data_path.empty() ? artifact(cfg, "test.csv") : data_path;
  csv::Table t = csv::read(path);
  Matrix x = ambient_columns(t, path);
  Matrix y = embed_batch(model, x);
  csv::write(artifact(cfg, "embedded.csv"), indexed_header("y", y.cols()), y);
  std::cout << "embed: wrote " << y.rows() << " rows to " << artifact(cfg, "embedded.csv") << "\n";
}

void cmd_reconstruct(const RunConfig& cfg, const std::string& data_path) {
  GseModel model = load_model(artifact(cfg, "model.gsem"));
  std::string path = data_path.empty() ? artifact(cfg, "embedded.csv") : data_path;
  csv::Table t = csv::read(path);
  Matrix y = columns_by_prefix(t, "y");
  if (y.cols() == 0) throw DimensionMismatch("'" + path + "' has no y1..yq columns");
  if (y.cols() != model.params().q) {
    throw DimensionMismatch("'" + path + "' has " + std::to_string(y.cols()) +
                            " coordinate columns, model expects " +
                            std::to_string(model.params().q));
  }
  Matrix x = reconstruct_batch(model, y);
  csv::write(artifact(cfg, "reconstructed.csv"), indexed_header("x", x.cols()), x);
  std::cout << "reconstruct: wrote " << x.rows() << " rows to "
            << artifact(cfg, "reconstructed.csv") << "\n";
}

void write_eval_csvs(const RunConfig& cfg, const GseModel& model, const EvalReport& report,
                     Index p) {
  Index q = model.params().q;
  Index n = Index(report.records.size());
  Matrix rows(n, p + q + p + 3);
  for (Index i = 0; i < n; ++i) {
    const EvalRecord& rec = report.records[std::size_t(i)];
    rows.row(i).setConstant(kNan);
    rows.block(i, 0, 1, p) = rec.x.transpose();
    if (rec.ok) {
      rows.block(i, p, 1, q) = rec.y.transpose();
      rows.block(i, p + q, 1, p) = rec.x_rec.transpose();
      rows(i, p + q + p) = rec.delta;
      rows(i, p + q + p + 1) = rec.tangent;
    }
    rows(i, p + q + p + 2) = rec.ok ? 1.0 : 0.0;
  }
  std::vector<std::string> header = indexed_header("x", p);
  for (const std::string& h : indexed_header("y", q)) header.push_back(h);
  for (const std::string& h : indexed_header("xr", p)) header.push_back(h);
  header.push_back("delta");
  header.push_back("tangent_error");
  header.push_back("ok");
  csv::write(artifact(cfg, "eval_points.csv"), header, rows);

  const EvalSummary& s = report.summary;
  Matrix agg(1, 6);
  agg << double(s.n), double(s.n_failed), s.mean_delta, s.median_delta, s.max_delta,
      s.mean_tangent;
  csv::write(artifact(cfg, "eval_summary.csv"),
             {"n", "n_failed", "mean_delta", "median_delta", "max_delta", "mean_tangent"}, agg);
}

void cmd_eval(const RunConfig& cfg, const std::string& data_path) {
  GseModel model = load_model(artifact(cfg, "model.gsem"));
  std::string path = data_path.empty() ? artifact(cfg, "test.csv") : data_path;
  csv::Table t = csv::read(path);
  Matrix x = ambient_columns(t, path);
  Matrix coords = columns_by_prefix(t, "b");

  std::unique_ptr<Manifold> gen;
  const Matrix* coords_ptr = nullptr;
  if (coords.cols() > 0) {
    gen = cfg.make_generator();
    if (gen->q() == coords.cols()) {
      coords_ptr = &coords;
    } else {
      gen.reset();
    }
  }
  EvalReport report = evaluate(model, x, gen.get(), coords_ptr);
  write_eval_csvs(cfg, model, report, x.cols());

  if (cfg.plot) {
    plot_points(artifact(cfg, "test_cloud.svg"), "Test sample", x, "#1f6fb2");
    Index n_ok = Index(report.records.size()) - report.summary.n_failed;
    Matrix y(n_ok, model.params().q), xr(n_ok, x.cols());
    Index k = 0;
    for (const EvalRecord& rec : report.records) {
      if (!rec.ok) continue;
      y.row(k) = rec.y.transpose();
      xr.row(k) = rec.x_rec.transpose();
      ++k;
    }
    plot_points(artifact(cfg, "embedding.svg"), "Embedding of test sample", y, "#b2541f");
    plot_points(artifact(cfg, "reconstruction.svg"), "Reconstruction of test sample", xr,
                "#2e8540");
  }
  const EvalSummary& s = report.summary;
  std::cout << "eval: n=" << s.n << " failed=" << s.n_failed << " mean_delta="
            << csv::format(s.mean_delta) << " median_delta=" << csv::format(s.median_delta)
            << " max_delta=" << csv::format(s.max_delta);
  if (s.mean_tangent >= 0.0) std::cout << " mean_tangent=" << csv::format(s.mean_tangent);
  std::cout << "\n";
}

void cmd_sweep(const RunConfig& cfg) {
  if (cfg.sweep.empty()) throw InvalidConfig("config field 'sweep': empty; nothing to run");
  std::unique_ptr<Manifold> gen = cfg.make_generator();
  PointCloud test = sample_or_empty(*gen, cfg.n_test, cfg.test_seed);

  Index rows = Index(cfg.sweep.size());
  Matrix stats(rows, 7);
  Matrix timings(rows, 3);
  Index n_failed_runs = 0;
  bool have_error = false;
  ErrorKind first_kind = ErrorKind::Numeric;
  std::string first_error;

  for (Index r = 0; r < rows; ++r) {
    Index n = cfg.sweep[std::size_t(r)];
    stats.row(r).setConstant(kNan);
    stats(r, 0) = double(n);
    timings.row(r).setConstant(kNan);
    timings(r, 0) = double(n);
    try {
      PointCloud train = sample(*gen, n, cfg.train_seed);
      auto t0 = std::chrono::steady_clock::now();
      GseModel model = GseModel::fit(train.points, cfg.params);
      auto t1 = std::chrono::steady_clock::now();
      EvalReport report = evaluate(model, test.points, gen.get(), &test.coords);
      auto t2 = std::chrono::steady_clock::now();
      const EvalSummary& s = report.summary;
      stats(r, 1) = 1.0;
      stats(r, 2) = s.mean_delta;
      stats(r, 3) = s.median_delta;
      stats(r, 4) = s.max_delta;
      stats(r, 5) = s.mean_tangent;
      stats(r, 6) = double(s.n_failed);
      timings(r, 1) = std::chrono::duration<double>(t1 - t0).count();
      timings(r, 2) = std::chrono::duration<double>(t2 - t1).count();
      std::cout << "sweep n=" << n << ": median_delta=" << csv::format(s.median_delta)
                << " mean_delta=" << csv::format(s.mean_delta) << "\n";
    } catch (const Error& e) {
      stats(r, 1) = 0.0;
      ++n_failed_runs;
      if (!have_error) {
        have_error = true;
        first_kind = e.kind();
        first_error = e.what();
      }
      std::cerr << "sweep n=" << n << ": " << e.what() << " (skipped)\n";
    }
  }
  csv::write(artifact(cfg, "sweep.csv"),
             {"n", "ok", "mean_delta", "median_delta", "max_delta", "mean_tangent", "n_failed"},
             stats);
  csv::write(artifact(cfg, "sweep_timings.csv"), {"n", "fit_seconds", "eval_seconds"}, timings);

  if (cfg.plot) {
    svg::Series median, mean;
    median.label = "median delta";
    median.line = true;
    mean.label = "mean delta";
    mean.color = "#b2541f";
    mean.line = true;
    for (Index r = 0; r < rows; ++r) {
      if (stats(r, 1) != 1.0) continue;
      median.points.emplace_back(stats(r, 0), stats(r, 3));
      mean.points.emplace_back(stats(r, 0), stats(r, 2));
    }
    svg::write_chart(artifact(cfg, "sweep.svg"), "Reconstruction error vs. training size",
                     {median, mean}, "n (training points)", "reconstruction error");
  }
  if (n_failed_runs == rows) {
    throw Error(first_kind, "all sweep entries failed; first error: " + first_error);
  }
}

}  // namespace

std::unique_ptr<Manifold> RunConfig::make_generator() const {
  std::unique_ptr<Manifold> gen = make_manifold(manifold.name, manifold.q, manifold.seed);
  if (manifold.p >= 0 && gen->p() != manifold.p) {
    bad_field("manifold.p", "generator '" + gen->name() + "' has ambient dimension " +
                                std::to_string(gen->p()));
  }
  if (manifold.domain.size() > 0) {
    if (manifold.domain.rows() != gen->q()) {
      bad_field("manifold.domain", "needs exactly " + std::to_string(gen->q()) + " rows");
    }
    return std::make_unique<BoxOverride>(std::move(gen), manifold.domain);
  }
  return gen;
}

std::uint64_t RunConfig::hash() const { return fnv64(effective_json(*this).dump()); }

void RunConfig::validate() const {
  if (params.q < 1) bad_field("params.q", "must be at least 1");
  if (n_train < params.q + 2) {
    bad_field("n_train", "must be at least q+2 = " + std::to_string(params.q + 2));
  }
  if (n_test < 0) bad_field("n_test", "must be non-negative");
  if (params.eps1 <= 0.0 && params.eps1 != -1.0) {
    bad_field("params.eps1", "must be positive, or -1 to resolve from the sample");
  }
  if (params.eps2 < 0.0 && params.eps2 != -1.0) {
    bad_field("params.eps2", "must be non-negative, or -1 to resolve from eps1");
  }
  if (params.eps3 <= 0.0 && params.eps3 != -1.0) {
    bad_field("params.eps3", "must be positive, or -1 to use the relative rule");
  }
  if (params.eps3_rel <= 0.0) bad_field("params.eps3_rel", "must be positive");
  if (params.ogse_max_iter < 1) bad_field("params.ogse_max_iter", "must be at least 1");
  if (params.ogse_tol <= 0.0) bad_field("params.ogse_tol", "must be positive");
  if (params.v_cutoff <= 0.0) bad_field("params.v_cutoff", "must be positive");
  if (params.dense_eig_limit < 1) bad_field("params.dense_eig_limit", "must be at least 1");
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidConfig("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Tangent-bundle manifold learning: fit a low-dimensional chart to a point cloud, "
               "embed and reconstruct out-of-sample points, and evaluate on synthetic manifolds"};
  app.require_subcommand(1);

  std::string config_path, out_override, data_override, variant_override;
  std::uint64_t seed_override = 0;
  bool plot_flag = false;
  std::vector<CLI::Option*> seed_opts;

  auto add_common = [&](CLI::App* sub, bool with_data) {
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_override, "output directory (overrides the config)");
    sub->add_option("--variant", variant_override, "algorithm variant: gse or ogse");
    seed_opts.push_back(
        sub->add_option("--seed", seed_override, "training seed; the test seed becomes seed+1"));
    sub->add_flag("--plot", plot_flag, "emit SVG charts");
    if (with_data) {
      sub->add_option("--data", data_override,
                      "input CSV (defaults to the standard artifact in the output directory)");
    }
  };

  CLI::App* c_generate = app.add_subcommand("generate", "sample train/test sets from a generator");
  add_common(c_generate, false);
  CLI::App* c_fit = app.add_subcommand("fit", "fit a model to a training CSV");
  add_common(c_fit, true);
  CLI::App* c_embed = app.add_subcommand("embed", "map ambient points to coordinates");
  add_common(c_embed, true);
  CLI::App* c_reconstruct =
      app.add_subcommand("reconstruct", "map coordinates back to ambient points");
  add_common(c_reconstruct, true);
  CLI::App* c_eval = app.add_subcommand("eval", "per-point and aggregate reconstruction errors");
  add_common(c_eval, true);
  CLI::App* c_sweep = app.add_subcommand("sweep", "fit and evaluate over a list of sample sizes");
  add_common(c_sweep, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    RunConfig cfg = load_run_config(config_path);
    if (!variant_override.empty()) cfg.params.variant = variant_from_string(variant_override);
    bool seed_given = false;
    for (const CLI::Option* o : seed_opts) seed_given = seed_given || o->count() > 0;
    if (seed_given) {
      cfg.train_seed = seed_override;
      cfg.test_seed = seed_override + 1;
    }
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (plot_flag) cfg.plot = true;
    cfg.validate();
    try {
      std::filesystem::create_directories(cfg.out_dir);
    } catch (const std::filesystem::filesystem_error& e) {
      throw IoError("cannot create output directory '" + cfg.out_dir + "': " + e.what());
    }

    if (c_generate->parsed()) {
      cmd_generate(cfg);
    } else if (c_fit->parsed()) {
      cmd_fit(cfg, data_override);
    } else if (c_embed->parsed()) {
      cmd_embed(cfg, data_override);
    } else if (c_reconstruct->parsed()) {
      cmd_reconstruct(cfg, data_override);
    } else if (c_eval->parsed()) {
      cmd_eval(cfg, data_override);
    } else if (c_sweep->parsed()) {
      cmd_sweep(cfg);
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::Config:
        return 1;
      case ErrorKind::Data:
        return 2;
      case ErrorKind::Numeric:
        return 3;
    }
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace gse
