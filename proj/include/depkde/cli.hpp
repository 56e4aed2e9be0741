#pragma once

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "depkde/experiment.hpp"
#include "depkde/io.hpp"

namespace depkde::cli {

enum ExitCode : int {
  ok = 0,
  input_error = 2,
  method_failure = 3,
  config_error = 4,
};

struct CliConfig {
  std::string subcommand;
  std::string dist = "normal";
  std::string sampler = "iid";
  std::size_t n = 10000;
  std::size_t replicates = 50;
  std::size_t thin_k = 5;
  std::uint64_t seed = 1;
  std::vector<std::string> methods;
  std::string input;
  std::string out;
  std::string format = "csv";
  std::size_t grid_points = default_grid_points;
  std::string zeta_lag_mode = "adaptive";
  std::string diagonal = "include";
  std::optional<double> h;
  bool with_iat = false;
  std::size_t workers = 1;
};

inline TargetDistribution target_for(const std::string& dist) {
  if (dist == "normal") return TargetDistribution::study_normal();
  if (dist == "mixture") return TargetDistribution::study_mixture();
  if (dist == "lognormal") return TargetDistribution::study_lognormal();
  throw std::invalid_argument("no analytic target for dist '" + dist + "'");
}

inline AutocorrSpec zeta_spec_for(const CliConfig& c) {
  AutocorrSpec spec;
  spec.mode = c.zeta_lag_mode == "full" ? LagMode::Full : LagMode::Adaptive;
  return spec;
}

inline Provenance provenance(const CliConfig& c) {
  std::string methods;
  for (const auto& m : c.methods) methods += (methods.empty() ? "" : ";") + m;
  Provenance p{{"command", c.subcommand},     {"dist", c.dist},
               {"sampler", c.sampler},        {"n", std::to_string(c.n)},
               {"seed", std::to_string(c.seed)}, {"methods", methods},
               {"grid_points", std::to_string(c.grid_points)},
               {"zeta_lag_mode", c.zeta_lag_mode},
               {"diagonal", c.diagonal}};
  if (c.subcommand == "study") {
    p.emplace_back("replicates", std::to_string(c.replicates));
    p.emplace_back("thin_k", std::to_string(c.thin_k));
  }
  if (!c.input.empty()) p.emplace_back("input", c.input);
  if (c.h) p.emplace_back("h", format_real(*c.h));
  return p;
}

class output_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! Output sink: the named file, or `fallback` when no path was given.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty()) {
      stream_ = &fallback;
      return;
    }
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw output_error("cannot open '" + path + "' for writing");
    stream_ = file_.get();
  }
  std::ostream& get() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

//! Series from --input, or a generated sample from --dist/--sampler.
inline Sample load_sample(const CliConfig& c) {
  if (!c.input.empty()) {
    std::ifstream in(c.input);
    if (!in) throw parse_error("cannot open '" + c.input + "'", 0);
    return Sample(read_series(in));
  }
  const auto target = target_for(c.dist);
  if (c.sampler == "mh") {
    MHConfig mh;
    mh.seed = c.seed;
    mh.proposal_sd = tune_proposal(target, mh);
    mh.n_draws = c.n;
    return mh_sample(target, mh).sample;
  }
  return iid_sample(target, c.n, c.seed);
}

inline SelectorConfig selector_config(const Sample& s, Method m,
                                      const CliConfig& c) {
  auto cfg = default_config(s.values(), m);
  cfg.zeta_spec = zeta_spec_for(c);
  cfg.include_diagonal = c.diagonal == "include";
  return cfg;
}

inline std::string boundary_name(BoundaryHit b) {
  switch (b) {
    case BoundaryHit::None: return "none";
    case BoundaryHit::Lo: return "lo";
    case BoundaryHit::Hi: return "hi";
  }
  return "?";
}

inline int cmd_select(const CliConfig& c, std::ostream& out,
                      std::ostream& err) {
  Sink sink(c.out, out);
  std::optional<Sample> sample;
  try {
    sample.emplace(load_sample(c));
  } catch (const parse_error& ex) {
    err << "input error: " << ex.what() << '\n';
    return input_error;
  } catch (const degenerate_sample& ex) {
    err << "input error: " << ex.what() << '\n';
    return input_error;
  }
  const std::vector<std::string> names =
      c.methods.empty() ? std::vector<std::string>{"SJse"} : c.methods;
  BandwidthSelector selector(sample->values());
  std::vector<std::pair<Method, SelectorResult>> results;
  for (const auto& name : names) {
    const Method m = *parse_method(name);
    try {
      results.emplace_back(m, selector.select(selector_config(*sample, m, c)));
    } catch (const std::exception& ex) {
      err << "method " << name << " failed: " << ex.what() << '\n';
      return method_failure;
    }
  }
  auto& o = sink.get();
  if (c.format == "json") {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& [m, r] : results)
      arr.push_back({{"method", method_name(m)},
                     {"h", r.h},
                     {"objective", detail::json_real(r.objective_at_h)},
                     {"zeta", r.zeta_at_h},
                     {"evaluations", r.evaluations},
                     {"converged", r.converged},
                     {"boundary", boundary_name(r.boundary_hit)},
                     {"multiple_roots", r.multiple_roots},
                     {"pilot_fallback", r.pilot_fallback}});
    o << nlohmann::ordered_json{{"config", provenance(c)}, {"results", arr}}
             .dump(2)
      << '\n';
    return ok;
  }
  write_provenance(o, provenance(c));
  o << "method,h,objective,zeta,evaluations,converged,boundary,"
       "multiple_roots,pilot_fallback\n";
  for (const auto& [m, r] : results)
    o << method_name(m) << ',' << format_real(r.h) << ','
      << format_real(r.objective_at_h) << ',' << format_real(r.zeta_at_h)
      << ',' << r.evaluations << ',' << r.converged << ','
      << boundary_name(r.boundary_hit) << ',' << r.multiple_roots << ','
      << r.pilot_fallback << '\n';
  return ok;
}

inline StudyConfig study_config(const CliConfig& c) {
  StudyConfig s;
  s.target = target_for(c.dist);
  s.sampler = c.sampler == "mh" ? SamplerKind::MH : SamplerKind::Iid;
  s.n = c.n;
  s.replicates = c.replicates;
  s.thin_k = c.thin_k;
  s.base_seed = c.seed;
  s.grid_points = c.grid_points;
  s.zeta_spec = zeta_spec_for(c);
  s.include_diagonal = c.diagonal == "include";
  s.workers = c.workers;
  if (!c.methods.empty()) {
    s.methods.clear();
    for (const auto& m : c.methods) s.methods.push_back(*parse_estimator(m));
  }
  return s;
}

//! Writes <out>.summary.<ext> and <out>.records.<ext>; both go to stdout
//! when no --out prefix is given.
inline int cmd_study(const CliConfig& c, std::ostream& out,
                     std::ostream& err) {
  const std::string ext = c.format == "json" ? ".json" : ".csv";
  Sink summary_sink(c.out.empty() ? "" : c.out + ".summary" + ext, out);
  Sink records_sink(c.out.empty() ? "" : c.out + ".records" + ext, out);
  StudyConfig scfg;
  try {
    scfg = study_config(c);
    scfg.validate();
  } catch (const std::invalid_argument& ex) {
    err << "config error: " << ex.what() << '\n';
    return config_error;
  }
  ReplicateSummary res;
  try {
    res = run_study(scfg);
  } catch (const std::exception& ex) {
    err << "study failed: " << ex.what() << '\n';
    return method_failure;
  }
  std::size_t good = 0;
  for (const auto& r : res.records) good += r.ok;
  for (const auto& s : res.methods)
    if (s.failures)
      err << estimator_name(s.method) << ": " << s.failures
          << " replicate(s) failed\n";

  auto prov = provenance(c);
  if (scfg.sampler == SamplerKind::MH)
    prov.emplace_back("proposal_sd", format_real(res.proposal_sd));
  if (c.format == "json") {
    summary_sink.get() << nlohmann::ordered_json{
        {"config", prov}, {"summary", summary_json(res.methods)}}.dump(2)
                       << '\n';
    records_sink.get() << records_json(res.records).dump(2) << '\n';
  } else {
    write_summary_csv(summary_sink.get(), res.methods, prov);
    write_records_csv(records_sink.get(), res.records, prov);
  }
  return good == 0 ? method_failure : ok;
}

inline int cmd_curve(const CliConfig& c, std::ostream& out,
                     std::ostream& err) {
  Sink sink(c.out, out);
  std::optional<Sample> sample;
  try {
    sample.emplace(load_sample(c));
  } catch (const parse_error& ex) {
    err << "input error: " << ex.what() << '\n';
    return input_error;
  } catch (const degenerate_sample& ex) {
    err << "input error: " << ex.what() << '\n';
    return input_error;
  }
  const auto ys = sample->values();
  double h = 0.0;
  if (c.h) {
    h = *c.h;
  } else {
    const Method m =
        c.methods.empty() ? Method::SJse : *parse_method(c.methods.front());
    try {
      h = BandwidthSelector(ys).select(selector_config(*sample, m, c)).h;
    } catch (const std::exception& ex) {
      err << "method failed: " << ex.what() << '\n';
      return method_failure;
    }
  }
  const auto grid = make_grid(ys, h, c.grid_points);
  const auto curve = kde_curve(ys, h, grid);
  std::vector<double> taus;
  if (c.with_iat) {
    const auto spec = zeta_spec_for(c);
    AutocorrWorkspace ws(ys.size());
    std::vector<double> z;
    double dens = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k)
      taus.push_back(detail::kernel_iat(ys, h, grid[k], spec, ws, z, dens));
  }
  auto& o = sink.get();
  auto prov = provenance(c);
  prov.emplace_back("bandwidth", format_real(h));
  if (c.format == "json") {
    nlohmann::ordered_json j{{"config", prov}, {"h", h}, {"x", grid.points()},
                             {"density", curve}};
    if (c.with_iat) j["iat"] = taus;
    o << j.dump(2) << '\n';
    return ok;
  }
  write_provenance(o, prov);
  o << (c.with_iat ? "x,density,iat\n" : "x,density\n");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    o << format_real(grid[k]) << ',' << format_real(curve[k]);
    if (c.with_iat) o << ',' << format_real(taus[k]);
    o << '\n';
  }
  return ok;
}

//! Entry point shared by the executable and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out,
                   std::ostream& err) {
  CliConfig c;
  CLI::App app{"Dependence-aware KDE bandwidth selection", "depkde"};
  app.set_config("--config", "", "key=value configuration file");
  app.require_subcommand(1);

  std::vector<std::string> all_names;
  for (Estimator e : all_estimators) all_names.emplace_back(estimator_name(e));
  std::vector<std::string> selector_names;
  for (Method m : all_methods) selector_names.emplace_back(method_name(m));

  auto common = [&](CLI::App* sub) {
    sub->add_option("--dist", c.dist, "normal|mixture|lognormal|custom-file")
        ->check(CLI::IsMember({"normal", "mixture", "lognormal", "custom-file"}));
    sub->add_option("--sampler", c.sampler)->check(CLI::IsMember({"iid", "mh"}));
    sub->add_option("--n", c.n)->check(CLI::Range(2ul, 100000000ul));
    sub->add_option("--seed", c.seed);
    sub->add_option("--out", c.out);
    sub->add_option("--format", c.format)->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--grid-points", c.grid_points)
        ->check(CLI::Range(2ul, 1000000ul));
    sub->add_option("--zeta-lag-mode", c.zeta_lag_mode)
        ->check(CLI::IsMember({"adaptive", "full"}));
    sub->add_option("--diagonal", c.diagonal)
        ->check(CLI::IsMember({"include", "exclude"}));
  };

  auto* sel = app.add_subcommand("select", "select a bandwidth for a series");
  common(sel);
  sel->add_option("--input", c.input, "one value per line, draw order");
  sel->add_option("--method,--methods", c.methods)
      ->check(CLI::IsMember(selector_names));

  auto* study = app.add_subcommand("study", "run the simulation study");
  common(study);
  study->add_option("--replicates", c.replicates)->check(CLI::PositiveNumber);
  study->add_option("--thin-k", c.thin_k)->check(CLI::PositiveNumber);
  study->add_option("--method,--methods", c.methods)
      ->check(CLI::IsMember(all_names));
  study->add_option("--workers", c.workers);

  auto* curve = app.add_subcommand("curve", "emit a density curve");
  curve->set_help_flag("--help", "Print this help message and exit");
  common(curve);
  curve->add_option("--input", c.input);
  curve->add_option("--method,--methods", c.methods)
      ->check(CLI::IsMember(selector_names));
  curve->add_option("--h", c.h)->check(CLI::PositiveNumber);
  curve->add_flag("--with-iat", c.with_iat, "add the kernel IAT column");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return config_error;
  }

  c.subcommand = sel->parsed() ? "select" : study->parsed() ? "study" : "curve";
  if (c.dist == "custom-file" && c.input.empty()) {
    err << "config error: --dist custom-file needs --input\n";
    return config_error;
  }
  if (c.subcommand == "study" && c.dist == "custom-file") {
    err << "config error: study needs an analytic --dist\n";
    return config_error;
  }
  try {
    if (c.subcommand == "select") return cmd_select(c, out, err);
    if (c.subcommand == "study") return cmd_study(c, out, err);
    return cmd_curve(c, out, err);
  } catch (const output_error& ex) {
    err << "config error: " << ex.what() << '\n';
    return config_error;
  } catch (const std::exception& ex) {
    err << "failed: " << ex.what() << '\n';
    return method_failure;
  }
}

}  // namespace depkde::cli
