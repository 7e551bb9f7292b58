#include "support.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace testing_support;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

int run(const std::string& args)
{
    const std::string cmd = std::string(MFSCOPE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

std::size_t line_count(const fs::path& p)
{
    const std::string s = slurp(p);
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

} // namespace

TEST(Cli, GenerateWritesCsvAndManifest)
{
    const auto dir = temp_dir("cli_gen");
    const auto f = (dir / "f.csv").string();
    ASSERT_EQ(run("generate --family flat --d 2 --ambient 3 --n 100 --seed 7 --out " + f), 0);
    EXPECT_EQ(line_count(f), 100u);
    const json m = read_json(dir / "manifest.json");
    EXPECT_EQ(m["command"], "generate");
    EXPECT_EQ(m["version"], mfscope::version);
    EXPECT_EQ(m["config"]["seed"], 7);
    EXPECT_EQ(m["config"]["embed"], "linear-isometric");

    const std::string first = slurp(f);
    ASSERT_EQ(run("generate --family flat --d 2 --ambient 3 --n 100 --seed 7 --out " + f), 0);
    EXPECT_EQ(slurp(f), first);
}

TEST(Cli, GenerateBinaryMatchesLibrary)
{
    const auto dir = temp_dir("cli_genbin");
    const auto f = (dir / "s.bin").string();
    ASSERT_EQ(run("generate --family sphere --d 2 --ambient 4 --n 50 --seed 3 --embed random-rotation --format bin --out " + f), 0);
    ManifoldSpec s;
    s.family = ManifoldFamily::sphere;
    s.intrinsic_dim = 2;
    s.ambient_dim = 4;
    s.n_points = 50;
    s.embed = Embedding::random_rotation;
    s.rng_seed = 3;
    EXPECT_TRUE(load_points(f, FileFormat::binary).points() == generate(s).points());
}

TEST(Cli, InvalidSpecExitsTwo)
{
    const auto dir = temp_dir("cli_badspec");
    EXPECT_EQ(run("generate --family sphere --d 3 --ambient 3 --out " + (dir / "x.csv").string()), 2);
    EXPECT_EQ(run("generate --family torus --out " + (dir / "x.csv").string()), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("graph --k notanumber"), 2);
}

TEST(Cli, GraphOnTwoPoints)
{
    const auto dir = temp_dir("cli_graph2");
    write(dir / "p.csv", "0,0\n0.6,0.8\n");
    ASSERT_EQ(run("graph --in " + (dir / "p.csv").string() + " --graph nnk --k 1 --sigma fixed:1 --out-dir " +
                  (dir / "o").string()),
              0);
    const std::string edges = slurp(dir / "o" / "edges.csv");
    std::istringstream in(edges);
    std::string header, e0, e1, extra;
    std::getline(in, header);
    std::getline(in, e0);
    std::getline(in, e1);
    EXPECT_FALSE(std::getline(in, extra));
    EXPECT_EQ(header, "src,dst,weight");
    const double w = std::exp(-0.5);
    EXPECT_NEAR(std::stod(e0.substr(4)), w, 1e-9);
    EXPECT_EQ(e0.substr(0, 4), "0,1,");
    EXPECT_EQ(e1.substr(0, 4), "1,0,");
    const json s = read_json(dir / "o" / "summary.json");
    EXPECT_EQ(s["mean_support_size"], 1.0);
    EXPECT_EQ(s["initial_K"], 1);
    EXPECT_TRUE(fs::exists(dir / "o" / "manifest.json"));
}

TEST(Cli, GraphErrorsMapToExitCodes)
{
    const auto dir = temp_dir("cli_grapherr");
    write(dir / "p.csv", "0,0\n1,0\n3,0\n");
    write(dir / "same.csv", "1,1\n1,1\n1,1\n");
    write(dir / "bad.csv", "1,a\n");
    write(dir / "empty.csv", "");
    const std::string out = " --out-dir " + (dir / "o").string();
    EXPECT_EQ(run("graph --graph knn --k 3 --in " + (dir / "p.csv").string() + out), 2);
    EXPECT_EQ(run("graph --graph knn --k 2 --in " + (dir / "p.csv").string() + out), 0);
    EXPECT_EQ(run("graph --k 2 --in " + (dir / "same.csv").string() + out), 3);
    EXPECT_EQ(run("graph --k 1 --in " + (dir / "bad.csv").string() + out), 2);
    EXPECT_EQ(run("graph --k 1 --in " + (dir / "empty.csv").string() + out), 2);
    EXPECT_EQ(run("graph --k 1 --in " + (dir / "missing.csv").string() + out), 2);
    EXPECT_EQ(run("graph --k 1 --sigma wide --in " + (dir / "p.csv").string() + out), 2);
}

TEST(Cli, NnkSupportBoundInSummary)
{
    const auto dir = temp_dir("cli_support");
    const auto f = (dir / "r.csv").string();
    ASSERT_EQ(run("generate --family swiss-roll --n 400 --seed 1 --out " + f), 0);
    ASSERT_EQ(run("graph --in " + f + " --k 12 --out-dir " + (dir / "o").string()), 0);
    const json s = read_json(dir / "o" / "summary.json");
    EXPECT_LE(s["mean_support_size"].get<double>(), 12.0);
    EXPECT_EQ(s["residual_quantiles"].size(), 5u);
}

TEST(Cli, IdOnLineInR5)
{
    const auto dir = temp_dir("cli_line");
    std::ostringstream pts;
    for (int i = 0; i < 40; ++i) {
        const double t = 0.1 * i;
        pts << t << ',' << 2 * t << ',' << -t << ',' << 0.5 * t << ",1\n";
    }
    write(dir / "l.csv", pts.str());
    ASSERT_EQ(run("id --in " + (dir / "l.csv").string() + " --k 6 --out-dir " + (dir / "o").string()), 0);
    const json r = read_json(dir / "o" / "id.json");
    EXPECT_EQ(r["mean_id"], 1.0);
    EXPECT_EQ(r["median_id"], 1.0);
    EXPECT_EQ(line_count(dir / "o" / "id_per_node.csv"), 41u);
    ASSERT_EQ(run("id --graph knn --in " + (dir / "l.csv").string() + " --k 6 --out-dir " + (dir / "k").string()), 0);
    const json k = read_json(dir / "k" / "id.json");
    EXPECT_EQ(k["mean_id"], 1.0);
    EXPECT_TRUE(k["ks_adjacent_vs_random"].is_null());
}

TEST(Cli, DiametersUnitSquare)
{
    const auto dir = temp_dir("cli_square");
    write(dir / "sq.csv", "0.5,0.5\n0,0\n1,0\n0,1\n1,1\n");
    ASSERT_EQ(run("diameters --in " + (dir / "sq.csv").string() + " --k 4 --sigma fixed:1 --out-dir " +
                  (dir / "o").string()),
              0);
    const json d = read_json(dir / "o" / "diameters.json");
    EXPECT_NEAR(d["max"].get<double>(), std::sqrt(2.0), 1e-15);
    EXPECT_TRUE(d["quantiles"].contains("0.5"));
}

TEST(Cli, AnglesOnPerfectFlat)
{
    const auto dir = temp_dir("cli_angles");
    const auto f = (dir / "f.csv").string();
    ASSERT_EQ(run("generate --family flat --d 2 --ambient 4 --n 300 --seed 2 --embed random-rotation --out " + f), 0);
    ASSERT_EQ(run("angles --in " + f + " --k 20 --ratio 1e-6 --pairs 100 --seed 5 --out-dir " + (dir / "o").string()), 0);
    const json a = read_json(dir / "o" / "angles.json");
    EXPECT_LT(a["adjacent_quantiles"]["1"].get<double>(), 1e-6);
    EXPECT_LT(a["random_quantiles"]["1"].get<double>(), 1e-6);
    EXPECT_EQ(a["n_random_pairs"], 100);
    const std::string first = slurp(dir / "o" / "angles.csv");
    ASSERT_EQ(run("angles --in " + f + " --k 20 --ratio 1e-6 --pairs 100 --seed 5 --workers 3 --out-dir " + (dir / "o").string()), 0);
    EXPECT_EQ(slurp(dir / "o" / "angles.csv"), first);
}

TEST(Cli, MultiscaleCardinalityAndOutputs)
{
    const auto dir = temp_dir("cli_ms");
    const auto f = (dir / "f.csv").string();
    ASSERT_EQ(run("generate --family flat --d 2 --ambient 3 --n 1000 --seed 1 --out " + f), 0);
    const std::string args = "multiscale --in " + f + " --policy nnk --scales 5 --steps 100 --k 15 --pairs 100 --seed 3";
    ASSERT_EQ(run(args + " --out-dir " + (dir / "a").string()), 0);
    const json s = read_json(dir / "a" / "multiscale_summary.json");
    EXPECT_EQ(s["final_n_points"], 500);
    EXPECT_TRUE(s["diameter_shift"].is_number());
    const json trace = read_json(dir / "a" / "scale_trace.json");
    ASSERT_EQ(trace.size(), 6u);
    EXPECT_EQ(trace[5]["n_points"], 500);
    EXPECT_TRUE(trace[3]["angle_summary"]["ks_adjacent_vs_random"].is_number());
    EXPECT_EQ(line_count(dir / "a" / "merged_pairs.csv"), 501u);
    EXPECT_TRUE(fs::exists(dir / "a" / "diameters_scale_5.csv"));

    ASSERT_EQ(run(args + " --workers 2 --out-dir " + (dir / "b").string()), 0);
    for (const char* name : {"scale_trace.json", "merged_pairs.csv", "diameters_scale_5.csv", "multiscale_summary.json"})
        EXPECT_EQ(slurp(dir / "a" / name), slurp(dir / "b" / name)) << name;
}

TEST(Cli, MultiscaleTooManyMergesExitsTwo)
{
    const auto dir = temp_dir("cli_ms_bad");
    write(dir / "p.csv", "0,0\n1,0\n3,0\n4,1\n");
    EXPECT_EQ(run("multiscale --in " + (dir / "p.csv").string() + " --scales 2 --steps 2 --k 2 --out-dir " +
                  (dir / "o").string()),
              2);
    EXPECT_EQ(run("multiscale --in " + (dir / "p.csv").string() + " --scales 1 --steps 0 --k 2 --out-dir " +
                  (dir / "o").string()),
              2);
}

TEST(Cli, ConfigFileWithFlagOverride)
{
    const auto dir = temp_dir("cli_config");
    write(dir / "cfg.json", R"({"family": "helix", "d": 1, "ambient": 3, "n": 30, "seed": 9})");
    const auto f = (dir / "h.csv").string();
    ASSERT_EQ(run("generate --config " + (dir / "cfg.json").string() + " --n 20 --out " + f), 0);
    EXPECT_EQ(line_count(f), 20u);
    const json m = read_json(dir / "manifest.json");
    EXPECT_EQ(m["config"]["family"], "helix");
    EXPECT_EQ(m["config"]["n"], 20);
    EXPECT_EQ(m["config"]["seed"], 9);

    write(dir / "broken.json", "{not json");
    EXPECT_EQ(run("generate --config " + (dir / "broken.json").string() + " --out " + f), 2);
}
