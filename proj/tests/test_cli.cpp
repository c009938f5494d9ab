#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fnls/io.hpp"

namespace fs = std::filesystem;
using fnls::io::json;

namespace {

struct Outcome {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "fnls_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Outcome run(const std::string& args) {
  const char* exe = std::getenv("FNLS_CLI");
  if (!exe) throw std::runtime_error("FNLS_CLI is not set");
  const fs::path out = workdir() / "stdout.txt", err = workdir() / "stderr.txt";
  const std::string cmd = "cd '" + workdir().string() + "' && '" + exe + "' " + args + " >'" + out.string() + "' 2>'" +
                          err.string() + "'";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.out = slurp(out);
  o.err = slurp(err);
  return o;
}

json small_model(double s = 0.75) {
  return json{{"grid", {{"dim", 2}, {"s", s}, {"half_width", 10}, {"points", 64}}},
              {"nonlinearity", {{"kind", "power"}, {"p", 3}, {"t0", 10}}},
              {"potential", {{"kind", "constant"}, {"m0", 1}}}};
}

fs::path write_config(const std::string& name, const json& j) {
  const fs::path p = workdir() / name;
  fnls::io::write_json(p, j);
  return p;
}

} // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("ground-state").code, 2);
  EXPECT_EQ(run("ground-state --config cfg.json --tier medium").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, MissingConfigOrModelExitsTwo) {
  EXPECT_EQ(run("ground-state --config does-not-exist.json").code, 2);
  const auto cfg = write_config("nomodel.json", json{{"run_id", "x"}, {"model", "absent.model"}});
  const Outcome o = run("ground-state --config '" + cfg.string() + "'");
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("absent.model"), std::string::npos) << o.err;
}

TEST(Cli, CriticalGrowthFailsValidation) {
  const auto cfg = write_config("critical.json", json{{"run_id", "crit"}, {"model", small_model(0.5)}});
  const Outcome o = run("ground-state --config '" + cfg.string() + "' --out crit");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("f1.3"), std::string::npos) << o.err;
  EXPECT_FALSE(fs::exists(workdir() / "crit" / "crit_field.fnls"));
}

TEST(Cli, GroundStateRunDirectoryIsReproducible) {
  const auto cfg = write_config("gs.json", json{{"run_id", "gs"}, {"model", small_model()}});
  const Outcome first = run("ground-state --config '" + cfg.string() + "' --out first --jobs 1");
  ASSERT_EQ(first.code, 0) << first.err;
  const fs::path d = workdir() / "first";
  for (const char* f : {"gs_config.json", "gs_versions.json", "gs_field.fnls", "gs_energy.json", "gs_iterates.csv"})
    EXPECT_TRUE(fs::exists(d / f)) << f;

  const json resolved = fnls::io::read_json(d / "gs_config.json");
  EXPECT_EQ(resolved.at("command").get<std::string>(), "ground-state");
  EXPECT_EQ(resolved.at("model").at("grid").at("points").get<int>(), 64);
  const json versions = fnls::io::read_json(d / "gs_versions.json");
  for (const char* k : {"fnls", "fftw", "eigen", "nlohmann_json", "cli11", "compiler"}) EXPECT_TRUE(versions.contains(k)) << k;
  const json energy = fnls::io::read_json(d / "gs_energy.json");
  EXPECT_TRUE(energy.at("converged").get<bool>());

  const fnls::io::Table it = fnls::io::read_report(d / "gs_iterates.csv");
  EXPECT_GT(it.size(), 0u);
  EXPECT_EQ(it.columns().front(), "iter");

  // Re-running from the persisted config reproduces the outputs byte for byte.
  const Outcome second = run("ground-state --config '" + (d / "gs_config.json").string() + "' --out second --jobs 1");
  ASSERT_EQ(second.code, 0) << second.err;
  const fs::path e = workdir() / "second";
  EXPECT_EQ(slurp(e / "gs_iterates.csv"), slurp(d / "gs_iterates.csv"));
  EXPECT_EQ(slurp(e / "gs_field.fnls"), slurp(d / "gs_field.fnls"));

  const Outcome ex = run("export --input '" + (d / "gs_field.fnls").string() + "' --out exported");
  ASSERT_EQ(ex.code, 0) << ex.err;
  const fnls::io::Table t = fnls::io::read_report(workdir() / "exported" / "gs_field.csv");
  EXPECT_EQ(t.columns(), (std::vector<std::string>{"x", "y", "u"}));
  EXPECT_EQ(t.size(), 64u * 64u);
  const fnls::Field u = fnls::io::read_field(d / "gs_field.fnls");
  EXPECT_EQ(t.number(100, "u"), u.values[100]);
}

TEST(Cli, ExportRejectsMissingInput) {
  EXPECT_EQ(run("export --input nothing.fnls").code, 2);
  std::ofstream(workdir() / "junk.fnls") << "not a field";
  EXPECT_EQ(run("export --input junk.fnls").code, 2);
}
