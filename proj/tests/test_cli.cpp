#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "entdepth/cli.hpp"
#include "entdepth/csv.hpp"
#include "entdepth/error.hpp"

using namespace entdepth;
using namespace entdepth::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class Workdir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("entdepth_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    csv::write_file(path(name), text);
    return path(name);
  }

  int run_cli(std::vector<std::string> args, std::string* out = nullptr) const {
    args.insert(args.begin(), "entdepth");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    ::testing::internal::CaptureStdout();
    ::testing::internal::CaptureStderr();
    const int code = run(static_cast<int>(argv.size()), argv.data());
    const auto captured = ::testing::internal::GetCapturedStdout();
    ::testing::internal::GetCapturedStderr();
    if (out) *out = captured;
    return code;
  }

  fs::path dir_;
};

json cylinder_config(std::vector<int> depths = {1, 2}) {
  return {{"schema", "entdepth-config/1"},
          {"eta_source", {{"type", "cylinder"}, {"nu", 0.3}}},
          {"depths", depths},
          {"nodes", 64}};
}

}  // namespace

TEST(ParseConfig, RecordsDefaults) {
  const json doc = {{"schema", "entdepth-config/1"}, {"eta_source", {{"type", "cylinder"}, {"nu", 0.3}}}};
  const auto config = parse_config(doc);
  EXPECT_EQ(config.depths.size(), 2u);
  EXPECT_EQ(config.mu_points, 400u);
  EXPECT_EQ(config.nodes, 512u);
  EXPECT_EQ(config.seed, 1u);
  for (const char* key : {"depths", "mu_points", "nodes", "seed", "threads", "out", "eta_source.placement"}) {
    EXPECT_TRUE(config.applied_defaults.contains(key)) << key;
  }
}

TEST(ParseConfig, FortDefaultsAndCutoff) {
  const json doc = {{"schema", "entdepth-config/1"},
                    {"eta_source", {{"type", "fort"}, {"trap", {{"waist", 40e-6}}}}}};
  const auto config = parse_config(doc);
  const auto& fort = std::get<FortSource>(config.eta_source);
  EXPECT_DOUBLE_EQ(fort.trap.r_max, 80e-6);
  EXPECT_EQ(fort.samples, 1'000'000u);
  EXPECT_TRUE(config.applied_defaults.contains("eta_source.trap.r_max"));
  EXPECT_FALSE(config.applied_defaults.contains("eta_source.trap.waist"));
}

TEST(ParseConfig, DepthSpecs) {
  auto doc = cylinder_config();
  doc["depths"] = json::array({1, 2, {{"n", 4}, {"bound", "analytic"}}, 5, 6});
  const auto config = parse_config(doc);
  ASSERT_EQ(config.depths.size(), 5u);
  EXPECT_EQ(config.depths[2].kind, BoundKind::analytic);
  EXPECT_EQ(config.depths[3].kind, BoundKind::analytic);
  EXPECT_EQ(config.depths[4].kind, BoundKind::numerical_even);
}

TEST(ParseConfig, Rejections) {
  auto bad = [](json doc) { EXPECT_THROW(parse_config(doc), InvalidInput) << doc.dump(); };
  auto doc = cylinder_config();
  doc.erase("schema");
  bad(doc);
  doc = cylinder_config();
  doc["schema"] = "entdepth-config/2";
  bad(doc);
  bad(cylinder_config({2, 4}));
  bad(cylinder_config({1, 4, 2}));
  bad(cylinder_config({1, 1}));
  doc = cylinder_config();
  doc["depths"] = json::array({1, {{"n", 3}, {"bound", "numerical"}}});
  bad(doc);
  doc = cylinder_config();
  doc["mu_points"] = 50;
  bad(doc);
  doc = cylinder_config();
  doc["nodes"] = "many";
  bad(doc);
  doc = cylinder_config();
  doc["eta_source"] = {{"type", "sphere"}};
  bad(doc);
  doc = cylinder_config();
  doc.erase("eta_source");
  bad(doc);
  bad(json::array());
}

TEST(ParseConfig, OverridesWin) {
  Overrides o;
  o.seed = 77;
  o.nodes = 32;
  o.mu_points = 250;
  o.out_dir = "elsewhere";
  const auto config = parse_config(cylinder_config(), o);
  EXPECT_EQ(config.seed, 77u);
  EXPECT_EQ(config.nodes, 32u);
  EXPECT_EQ(config.mu_points, 250u);
  EXPECT_EQ(config.out_dir, "elsewhere");
}

TEST_F(Workdir, CurvesForUniformListAreQuadratic) {
  auto doc = cylinder_config({1});
  doc["eta_source"] = {{"type", "list"}, {"etas", {1, 1, 1}}};
  doc["out"] = path("out");
  const auto config = parse_config(doc);
  const auto result = cmd_curves(config);
  const auto curve = curve_from_csv(csv::read_file(path("out/curve_depth1.csv")));
  for (const auto& p : curve.points) EXPECT_NEAR(p.v, p.s * p.s, 1e-12);
  EXPECT_TRUE(fs::exists(path("out/eta_nodes.csv")));
  EXPECT_TRUE(fs::exists(path("out/manifest.json")));
  EXPECT_EQ(result.files.size(), 3u);
}

TEST_F(Workdir, ManifestReproducesRun) {
  auto doc = cylinder_config({1, 2, 3});
  doc["out"] = path("a");
  cmd_curves(parse_config(doc));
  const auto manifest = json::parse(csv::read_file(path("a/manifest.json")));
  EXPECT_EQ(manifest["eta_fingerprint"].get<std::string>().size(), 16u);
  EXPECT_EQ(manifest["units"]["length"], "m");
  EXPECT_TRUE(manifest["applied_defaults"].contains("mu_points"));
  EXPECT_TRUE(manifest["depths"][2].contains("note"));
  EXPECT_EQ(manifest["files"].size(), 4u);

  auto replay = manifest["config"];
  replay["out"] = path("b");
  cmd_curves(parse_config(replay));
  for (const char* f : {"eta_nodes.csv", "curve_depth1.csv", "curve_depth2.csv", "curve_depth3.csv"}) {
    EXPECT_EQ(csv::read_file(path(std::string("a/") + f)), csv::read_file(path(std::string("b/") + f))) << f;
  }
}

TEST_F(Workdir, SymmetricReferenceAndRaw) {
  auto doc = cylinder_config({1, 2});
  doc["symmetric_reference"] = true;
  doc["raw"] = true;
  doc["out"] = path("o");
  const auto result = cmd_curves(parse_config(doc));
  EXPECT_EQ(result.symmetric_curves.size(), 2u);
  EXPECT_TRUE(fs::exists(path("o/curve_depth2_symmetric.csv")));
  const auto text = csv::read_file(path("o/curve_depth1.csv"));
  EXPECT_NE(text.find("sz_per_particle,var_per_particle"), std::string::npos);
}

TEST_F(Workdir, CurvesCommandIsDeterministic) {
  auto doc = cylinder_config({1, 2, 4});
  write("c.json", doc.dump());
  EXPECT_EQ(run_cli({"curves", "--config", path("c.json"), "--out", path("one")}), 0);
  EXPECT_EQ(run_cli({"curves", "--config", path("c.json"), "--out", path("two"), "--threads", "3"}), 0);
  for (const char* f : {"eta_nodes.csv", "curve_depth1.csv", "curve_depth2.csv", "curve_depth4.csv"}) {
    EXPECT_EQ(csv::read_file(path(std::string("one/") + f)), csv::read_file(path(std::string("two/") + f)));
  }
}

TEST_F(Workdir, CertifySyntheticPoint) {
  auto doc = cylinder_config({1, 2});
  write("c.json", doc.dump());
  ASSERT_EQ(run_cli({"curves", "--config", path("c.json"), "--out", path("curves")}), 0);
  const auto pair = curve_from_csv(csv::read_file(path("curves/curve_depth2.csv")));
  const double s = 0.6;
  const double v = pair(s) - 0.01;
  write("data.csv", "s_norm,v_norm,sigma_v,label\n" + csv::format17(s) + "," + csv::format17(v) + ",0,synthetic\n" +
                        "0.6,0.59,,plain\n");
  std::string out;
  EXPECT_EQ(run_cli({"certify", "--curves", path("curves/curve_depth1.csv"), path("curves/curve_depth2.csv"),
                     "--data", path("data.csv")},
                    &out),
            0);
  const auto row = out.substr(out.find("synthetic"));
  const auto fields = csv::split_fields(row.substr(0, row.find('\n')));
  ASSERT_EQ(fields.size(), 5u);
  EXPECT_EQ(fields[3], "3");
  EXPECT_NE(out.find("plain,0.59999999999999998,0.58999999999999997,1,"), std::string::npos);

  // Same verdicts when the curves are generated on the fly.
  std::string direct;
  EXPECT_EQ(run_cli({"certify", "--config", path("c.json"), "--data", path("data.csv")}, &direct), 0);
  EXPECT_EQ(direct, out);

  EXPECT_EQ(run_cli({"certify", "--config", path("c.json"), "--data", path("data.csv"), "--out",
                     path("verdicts.csv")}),
            0);
  EXPECT_EQ(csv::read_file(path("verdicts.csv")), out);
}

TEST_F(Workdir, CertifyEmptyDataFile) {
  auto doc = cylinder_config({1, 2});
  write("c.json", doc.dump());
  write("empty.csv", "");
  std::string out;
  EXPECT_EQ(run_cli({"certify", "--config", path("c.json"), "--data", path("empty.csv")}, &out), 0);
  EXPECT_EQ(out, "label,s_norm,v_norm,certified_depth,margin\n");
}

TEST_F(Workdir, CertifyFingerprintMismatch) {
  auto a = cylinder_config({1});
  auto b = cylinder_config({1, 2});
  b["eta_source"]["nu"] = 0.4;
  write("a.json", a.dump());
  write("b.json", b.dump());
  ASSERT_EQ(run_cli({"curves", "--config", path("a.json"), "--out", path("a")}), 0);
  ASSERT_EQ(run_cli({"curves", "--config", path("b.json"), "--out", path("b")}), 0);
  write("data.csv", "0.5,0.1\n");
  EXPECT_EQ(run_cli({"certify", "--curves", path("a/curve_depth1.csv"), path("b/curve_depth2.csv"), "--data",
                     path("data.csv")}),
            2);
  write("empty.csv", "");
  EXPECT_EQ(run_cli({"certify", "--curves", path("a/curve_depth1.csv"), path("b/curve_depth2.csv"), "--data",
                     path("empty.csv")}),
            2);
}

TEST_F(Workdir, CertifyMalformedRow) {
  write("c.json", cylinder_config({1}).dump());
  write("data.csv", "0.5,0.1\n0.5,oops\n");
  CertifyOptions options;
  options.config = load_config(path("c.json"));
  options.data_path = path("data.csv");
  try {
    cmd_certify(options);
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_EQ(run_cli({"certify", "--config", path("c.json"), "--data", path("data.csv")}), 1);
}

TEST_F(Workdir, CertifyUsageErrors) {
  write("c.json", cylinder_config({1}).dump());
  write("data.csv", "0.5,0.1\n");
  EXPECT_EQ(run_cli({"certify", "--data", path("data.csv")}), 1);
  EXPECT_EQ(run_cli({"certify", "--config", path("c.json")}), 1);
  EXPECT_EQ(run_cli({"certify", "--config", path("missing.json"), "--data", path("data.csv")}), 1);
  EXPECT_EQ(run_cli({"certify", "--config", path("c.json"), "--data", path("data.csv"), "--k-sigma", "-1"}), 1);
}

TEST_F(Workdir, VerifyCommand) {
  std::string out;
  EXPECT_EQ(run_cli({"verify", "--n", "1", "--trials", "10"}, &out), 0);
  EXPECT_NE(out.find("OVERALL PASS"), std::string::npos);
  EXPECT_EQ(run_cli({"verify", "--n", "0"}), 1);
  EXPECT_EQ(run_cli({"verify", "--n", "7"}), 1);
  EXPECT_EQ(run_cli({"verify"}), 1);

  std::string first, second;
  EXPECT_EQ(run_cli({"verify", "--n", "2", "--trials", "100", "--seed", "4"}, &first), 0);
  EXPECT_EQ(run_cli({"verify", "--n", "2", "--trials", "100", "--seed", "4", "--threads", "4"}, &second), 0);
  EXPECT_EQ(first, second);
  EXPECT_NE(first.find("RESULT PASS"), std::string::npos);
  EXPECT_NE(first.find("gradient check: n=2 points=100"), std::string::npos);
  EXPECT_EQ(run_cli({"verify", "--n", "2", "--trials", "10", "--out", path("report.txt")}), 0);
  EXPECT_NE(csv::read_file(path("report.txt")).find("OVERALL PASS"), std::string::npos);
}

TEST_F(Workdir, XiCommand) {
  std::string out;
  write("etas.csv", "eta\n1\n0.001\n0.001\n");
  write("jz.csv", "0.0005\n0.5\n0.5\n");
  EXPECT_EQ(run_cli({"xi", "--etas", path("etas.csv"), "--jz", path("jz.csv")}, &out), 0);
  EXPECT_NEAR(std::stod(out), 0.334667, 1e-6);

  write("etas1.csv", "1\n1\n");
  write("jz1.csv", "0.5\n0.5\n");
  EXPECT_EQ(run_cli({"xi", "--etas", path("etas1.csv"), "--jz", path("jz1.csv")}, &out), 0);
  EXPECT_NEAR(std::stod(out), 1.0, 1e-15);

  std::string etas = "1\n", jz = "5e-07\n";
  for (int i = 0; i < 99; ++i) {
    etas += "1e-06\n";
    jz += "0.5\n";
  }
  write("etas100.csv", etas);
  write("jz100.csv", jz);
  EXPECT_EQ(run_cli({"xi", "--etas", path("etas100.csv"), "--jz", path("jz100.csv")}, &out), 0);
  EXPECT_GE(std::stod(out), 0.01);
  EXPECT_LE(std::stod(out), 0.01 + 1e-5);

  write("short.csv", "0.5\n");
  EXPECT_EQ(run_cli({"xi", "--etas", path("etas1.csv"), "--jz", path("short.csv")}), 1);
  write("zero.csv", "0.5\n-0.5\n");
  EXPECT_EQ(run_cli({"xi", "--etas", path("etas1.csv"), "--jz", path("zero.csv")}), 1);
  write("bad.csv", "1\nabc\n");
  EXPECT_EQ(run_cli({"xi", "--etas", path("bad.csv"), "--jz", path("jz1.csv")}), 1);
}

TEST_F(Workdir, UsageErrors) {
  EXPECT_EQ(run_cli({}), 1);
  EXPECT_EQ(run_cli({"bogus"}), 1);
  EXPECT_EQ(run_cli({"curves"}), 1);
  EXPECT_EQ(run_cli({"curves", "--config", path("c.json"), "--frobnicate"}), 1);
  write("broken.json", "{not json");
  EXPECT_EQ(run_cli({"curves", "--config", path("broken.json")}), 1);
  write("badnu.json", json({{"schema", "entdepth-config/1"}, {"eta_source", {{"type", "cylinder"}, {"nu", 2.0}}}}).dump());
  EXPECT_EQ(run_cli({"curves", "--config", path("badnu.json"), "--out", path("x")}), 1);
  EXPECT_EQ(run_cli({"--help"}), 0);
}

TEST_F(Workdir, NodesFileSource) {
  write("nodes.csv", "eta,weight\n0.5,1\n1,1\n");
  json doc = {{"schema", "entdepth-config/1"},
              {"eta_source", {{"type", "csv"}, {"path", path("nodes.csv")}}},
              {"depths", {1}},
              {"out", path("o")}};
  const auto result = cmd_curves(parse_config(doc));
  EXPECT_EQ(result.nodes.size(), 2u);
  EXPECT_EQ(result.nodes.fingerprint(), nodes_from_list(std::vector<double>{0.5, 1.0}).fingerprint());
}
