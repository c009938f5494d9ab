#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fftw3.h>

#include "fnls/fnls.hpp"

namespace fs = std::filesystem;
using fnls::io::json;

namespace {

enum Exit { ok = 0, check_failed = 1, usage = 2, numeric = 3 };

struct CommonFlags {
  std::string config;
  std::string out;
  std::string tier;
  std::optional<int> jobs;
  std::optional<std::uint64_t> seed;
};

/// Output directory, file naming and the two files every run directory carries.
class RunDir {
public:
  RunDir(const fnls::RunConfig& cfg, const std::string& out, const std::string& command)
      : id_(cfg.run_id), dir_(out.empty() ? fs::path("runs") / cfg.run_id : fs::path(out)) {
    fs::create_directories(dir_);
    json resolved = cfg.resolved();
    resolved["command"] = command;
    fnls::io::write_json(path("config.json"), resolved);
    fnls::io::write_json(path("versions.json"), versions());
  }

  fs::path path(const std::string& suffix) const { return dir_ / (id_ + "_" + suffix); }
  const fs::path& dir() const { return dir_; }

  void csv(const std::string& name, const fnls::io::Table& t) const { fnls::io::write_report(path(name + ".csv"), t); }
  void json_file(const std::string& name, const json& j) const { fnls::io::write_json(path(name + ".json"), j); }

  static json versions() {
    return json{{"fnls", fnls::version},
                {"fftw", std::string(fftw_version)},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                {"cli11", CLI11_VERSION},
                {"compiler", __VERSION__},
                {"cplusplus", static_cast<std::int64_t>(__cplusplus)}};
  }

private:
  std::string id_;
  fs::path dir_;
};

std::string short_num(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, end) : fnls::io::format_double(v);
}

fnls::RunConfig load(const CommonFlags& f) {
  if (f.config.empty()) throw fnls::FormatError("--config is required");
  fnls::RunConfig cfg = fnls::load_run_config(f.config);
  if (!f.tier.empty()) cfg.tier = fnls::parse_tier(f.tier);
  if (f.jobs) cfg.jobs = *f.jobs;
  if (f.seed) cfg.seed = *f.seed;
  return cfg;
}

/// Standing assumptions on the configured model; prints and returns false on failure.
bool validate(const fnls::RunConfig& cfg) {
  const auto rep = fnls::validate_model(cfg.model);
  if (rep.passed()) return true;
  std::cerr << "fnls: model validation failed: " << rep.failures() << "\n";
  return false;
}

fnls::Field seed_field(const fnls::RunConfig& cfg) {
  return fnls::gaussian_seed(cfg.model.grid, cfg.ground_state.seed_amplitude, cfg.ground_state.seed_width);
}

int cmd_ground_state(const fnls::RunConfig& cfg, const std::string& out) {
  if (!validate(cfg)) return check_failed;
  RunDir run(cfg, out, "ground-state");
  const auto r = fnls::solve_ground_state(cfg.ground_state.a, cfg.model, cfg.solver, seed_field(cfg));
  fnls::io::write_field(run.path("field.fnls"), r.field);
  json summary = fnls::io::summary(r);
  summary["a"] = cfg.ground_state.a;
  run.json_file("energy", summary);
  run.csv("iterates", fnls::io::iterate_table(r));
  std::printf("E = %.12g  P = %.12g  residual = %.3g  iterations = %d  %s\n", r.energy.total, r.pohozaev, r.residual,
              r.iterations, r.converged ? "converged" : r.message.c_str());
  return r.converged ? ok : numeric;
}

fnls::SolutionDictionary dictionary_for(const fnls::RunConfig& cfg) {
  return fnls::build_dictionary(cfg.model, cfg.proof.nu0, cfg.dictionary.samples, cfg.solver, seed_field(cfg),
                                cfg.jobs);
}

void write_dictionary(const RunDir& run, const fnls::SolutionDictionary& d) {
  for (std::size_t i = 0; i < d.entries.size(); ++i)
    fnls::io::write_field(run.path("dict_" + std::to_string(i) + ".fnls"), d.entries[i].profile());
  run.csv("dictionary", fnls::io::dictionary_table(d));
  run.json_file("dictionary", json{{"entries", d.size()}, {"r_star", d.r_star}, {"R0", d.R0}});
}

int cmd_dictionary(const fnls::RunConfig& cfg, const std::string& out) {
  if (!validate(cfg)) return check_failed;
  RunDir run(cfg, out, "dictionary");
  const auto d = dictionary_for(cfg);
  write_dictionary(run, d);
  std::printf("%zu entries  r* = %.10g  R0 = %.10g\n", d.size(), d.r_star, d.R0);
  return ok;
}

int cmd_semiclassical(const fnls::RunConfig& cfg, const std::string& out) {
  if (!validate(cfg)) return check_failed;
  if (cfg.model.potential.constant()) throw fnls::ValidationError("semiclassical runs need a potential with a well");
  const auto& sc = cfg.semiclassical;
  if (sc.eps.empty()) throw fnls::ValidationError("semiclassical.eps is empty");
  RunDir run(cfg, out, "semiclassical");
  const auto dict = dictionary_for(cfg);
  write_dictionary(run, dict);
  const fnls::Barycenter bary(dict, fnls::BarycenterConfig::from(dict));
  const fnls::Field& U0 = dict.entries.front().profile();
  const double E = dict.entries.front().result.energy.total;

  // seeds Phi_eps(t, p) at the first eps, p sampled evenly along K
  const auto& K = cfg.model.potential.K;
  const std::size_t np = std::min<std::size_t>(K.size(), std::max(1, sc.p_count));
  std::vector<fnls::Point> ps;
  for (std::size_t i = 0; i < np; ++i) ps.push_back(K[i * K.size() / np]);
  const double eps0 = sc.eps.front();
  std::vector<fnls::Field> seeds;
  std::vector<std::string> tags;
  for (const auto& p : ps)
    for (double t : sc.t) {
      seeds.push_back(fnls::phi_eps(t, p, U0, eps0));
      tags.push_back("t=" + short_num(t) + " p=(" + short_num(p[0]) + "," + short_num(p[1]) + "," + short_num(p[2]) +
                     ")");
    }
  const auto starts = fnls::multistart(eps0, seeds, tags, cfg.model, cfg.proof, cfg.solver, cfg.jobs);
  std::vector<fnls::SolveResult> converged;
  for (const auto& r : starts)
    if (r.converged) converged.push_back(r);
  fnls::ClusterOptions co = sc.cluster;
  co.symmetry_quotient = false;
  const auto raw = fnls::cluster_solutions(converged, co);
  co.symmetry_quotient = true;
  const auto quot = fnls::cluster_solutions(converged, co);
  run.csv("clusters", fnls::io::cluster_table(converged, raw, &quot));

  // continuation from the lowest-energy start
  json summary{{"starts", starts.size()},
               {"converged_starts", converged.size()},
               {"raw_clusters", raw.raw_count()},
               {"quotient_clusters", quot.raw_count()},
               {"E", E},
               {"R0", dict.R0},
               {"r_star", dict.r_star}};
  bool all_ok = !converged.empty();
  if (!converged.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < converged.size(); ++i)
      if (converged[i].energy.total < converged[best].energy.total) best = i;
    const auto results = fnls::continuation(sc.eps, converged[best].field, cfg.model, cfg.proof, cfg.solver);
    const auto rows = fnls::concentration_report(results, sc.eps, cfg.model, &bary);
    run.csv("concentration", fnls::io::concentration_table(rows));
    for (std::size_t i = 0; i < results.size(); ++i)
      fnls::io::write_field(run.path("eps_" + std::to_string(i) + ".fnls"), results[i].field);
    for (const auto& r : results) all_ok = all_ok && r.converged;
    all_ok = all_ok && results.size() == sc.eps.size();
    summary["continuation_steps"] = results.size();
  }

  fnls::ProofParams pp = cfg.proof;
  if (!(pp.delta_hat > 0.0))
    pp.delta_hat = sc.delta_hat_fraction * fnls::max_delta_hat(E, pp.sigma0, cfg.model.grid.dim, cfg.model.grid.s);
  std::vector<std::pair<double, fnls::Point>> samples;
  for (const auto& p : ps)
    for (double t : {1.0 - pp.sigma0, 1.0, 1.0 + pp.sigma0}) samples.emplace_back(t, p);
  const auto sw = fnls::sandwich_check(U0, cfg.model, pp, sc.eps.back(), E, samples);
  run.csv("sandwich", fnls::io::sandwich_table(sw));
  summary["sandwich"] = fnls::io::to_json(sw);
  run.json_file("summary", summary);
  std::printf("%zu/%zu starts converged, %zu raw clusters (%zu modulo symmetry), sandwich %s\n", converged.size(),
              starts.size(), raw.raw_count(), quot.raw_count(), sw.passed() ? "holds" : "fails");
  if (!all_ok) return numeric;
  return sw.passed() ? ok : check_failed;
}

int cmd_verify(const fnls::RunConfig& cfg, const std::string& out) {
  if (!validate(cfg)) return check_failed;
  RunDir run(cfg, out, "verify");
  fnls::verify::VerifyOptions vo{cfg.tier, cfg.jobs, cfg.seed};
  const auto results = fnls::verify::run_checks(vo, {}, [&](const fnls::verify::CheckResult& r) {
    std::printf("%s\n", fnls::verify::format_line(r).c_str());
    std::fflush(stdout);
  });
  bool all = true;
  json checks = json::array();
  for (const auto& r : results) {
    all = all && r.passed;
    checks.push_back(json{{"id", r.id},
                          {"name", r.name},
                          {"passed", r.passed},
                          {"value", r.value},
                          {"tolerance", r.tolerance},
                          {"seconds", r.seconds},
                          {"detail", r.detail}});
    for (const auto& [name, table] : r.tables) run.csv(r.id + "_" + name, table);
  }
  run.csv("verify", fnls::verify::summary_table(results));
  run.json_file("verify", json{{"tier", fnls::to_string(cfg.tier)}, {"passed", all}, {"checks", checks}});
  return all ? ok : check_failed;
}

/// Field dump to CSV: one row per grid point with its coordinates.
int cmd_export(const std::string& input, const std::string& out) {
  const fnls::Field u = fnls::io::read_field(input);
  const fnls::GridSpec& g = u.grid;
  static const char* axes[] = {"x", "y", "z"};
  std::vector<std::string> cols(axes, axes + g.dim);
  cols.push_back("u");
  fnls::io::Table t(cols);
  for (std::size_t k = 0; k < u.size(); ++k) {
    const fnls::Point x = g.position(k);
    std::vector<fnls::io::Cell> row(x.begin(), x.begin() + g.dim);
    row.emplace_back(u.values[k]);
    t.add(std::move(row));
  }
  fs::path dest = out.empty() ? fs::path(input).replace_extension(".csv")
                              : fs::path(out) / fs::path(input).filename().replace_extension(".csv");
  if (!out.empty()) fs::create_directories(out);
  fnls::io::write_report(dest, t);
  std::printf("%s\n", dest.string().c_str());
  return ok;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional NLS pseudospectral solver and verification lab"};
  app.require_subcommand(1);
  CommonFlags flags;
  std::string input;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "run configuration (JSON)")->required();
    sub->add_option("--out", flags.out, "output directory (default runs/<run_id>)");
    sub->add_option("--tier", flags.tier, "fast or full")->check(CLI::IsMember({"fast", "full"}));
    sub->add_option("--jobs", flags.jobs, "worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", flags.seed, "RNG seed for randomized sampling");
  };
  auto* gs = app.add_subcommand("ground-state", "solve for the ground state at level a");
  auto* dict = app.add_subcommand("dictionary", "sample ground states over [m0, m0 + nu0] and fit r*, R0");
  auto* sc = app.add_subcommand("semiclassical", "multistart, continuation in eps and the sandwich check");
  auto* ver = app.add_subcommand("verify", "run the acceptance checks");
  for (auto* s : {gs, dict, sc, ver}) add_common(s);
  auto* exp = app.add_subcommand("export", "convert a field dump to CSV");
  exp->add_option("--input", input, "FNLS1 field file")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", flags.out, "output directory (default: next to the input)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage;
  }

  fnls::RunConfig cfg;
  if (!exp->parsed()) {
    try {
      cfg = load(flags);
    } catch (const fnls::Error& e) {
      std::cerr << "fnls: " << e.what() << "\n" << app.get_subcommands().front()->help();
      return usage;
    }
  }
  try {
    if (gs->parsed()) return cmd_ground_state(cfg, flags.out);
    if (dict->parsed()) return cmd_dictionary(cfg, flags.out);
    if (sc->parsed()) return cmd_semiclassical(cfg, flags.out);
    if (ver->parsed()) return cmd_verify(cfg, flags.out);
    return cmd_export(input, flags.out);
  } catch (const fnls::ValidationError& e) {
    std::cerr << "fnls: " << e.what() << "\n";
    return check_failed;
  } catch (const fnls::FormatError& e) {
    std::cerr << "fnls: " << e.what() << "\n";
    return usage;
  } catch (const std::exception& e) {
    std::cerr << "fnls: " << e.what() << "\n";
    return numeric;
  }
}
