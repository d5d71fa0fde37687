#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bitlattice/cli.hpp"

namespace fs = std::filesystem;
using bitlattice::cli::run;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result call(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("bitlattice_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string write(const std::string& name, const std::string& content) const {
        std::ofstream(path(name)) << content;
        return path(name);
    }

    static std::string read(const std::string& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    fs::path dir_;
};

const std::string kPrices = std::string(FIXTURE_DIR) + "/synthetic_prices.csv";
const std::string kChain = std::string(FIXTURE_DIR) + "/synthetic_chain.csv";

}  // namespace

TEST_F(Cli, EstimateProbsWritesTableAndZtest) {
    auto r = call({"estimate-probs", "--input", kPrices, "--horizon", "3", "--ztest", "0.05", "--output",
                   path("t.json"), "--ztest-output", path("z.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = nlohmann::json::parse(read(path("t.json")));
    EXPECT_EQ(j["horizon"], 3);
    EXPECT_EQ(j["sample_count"], 1000);
    EXPECT_NEAR(j["joint"]["000"].get<double>(), 0.17, 1e-12);
    auto z = read(path("z.csv"));
    EXPECT_EQ(z.rfind("path_index,path_bits,estimate,z_stat,p_value", 0), 0u);
    EXPECT_EQ(std::count(z.begin(), z.end(), '\n'), 9);

    auto again = call({"ztest", "--table", path("t.json"), "--format", "json"});
    ASSERT_EQ(again.code, 0) << again.err;
    EXPECT_EQ(nlohmann::json::parse(again.out)["paths"].size(), 8u);
}

TEST_F(Cli, OutputsAreDeterministic) {
    std::vector<std::string> args{"simulate", "--mu", "0.05", "--sigma", "0.2", "--noise-q", "1", "--noise-std",
                                  "0.001", "--steps", "200", "--seed", "7"};
    EXPECT_EQ(call(args).out, call(args).out);
    auto a = call({"estimate-probs", "--input", kPrices, "--horizon", "2"});
    auto b = call({"estimate-probs", "--input", kPrices, "--horizon", "2"});
    EXPECT_EQ(a.out, b.out);
}

TEST_F(Cli, ValidationErrorsExitTwo) {
    EXPECT_EQ(call({"estimate-probs", "--input", kPrices, "--horizon", "0"}).code, 2);
    EXPECT_EQ(call({"estimate-probs", "--input", path("missing.csv"), "--horizon", "2"}).code, 2);
    EXPECT_EQ(call({"estimate-probs", "--horizon", "2"}).code, 2);
    EXPECT_EQ(call({"no-such-command"}).code, 2);
    auto bad = write("bad.csv", "2020-01-02,100\n2020-01-01,101\n");
    auto r = call({"estimate-probs", "--input", bad, "--horizon", "1"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("NonMonotoneDates"), std::string::npos);
}

TEST_F(Cli, FailedRunLeavesNoOutputFile) {
    auto out = path("table.json");
    auto r = call({"estimate-probs", "--input", kPrices, "--horizon", "25", "--output", out});
    EXPECT_EQ(r.code, 2);
    EXPECT_FALSE(fs::exists(out));
    EXPECT_FALSE(fs::exists(out + ".tmp"));
    // an existing file survives a failed run untouched
    write("table.json", "keep");
    call({"estimate-probs", "--input", kPrices, "--horizon", "25", "--output", out});
    EXPECT_EQ(read(out), "keep");
}

TEST_F(Cli, ComputationErrorsExitOne) {
    auto cfg = write("t.json", R"({"s0": 100, "maturity": 1, "steps": 1, "mu": 0.0, "sigma": 0.2, "rate": 0.3})");
    auto r = call({"price", "--tree-config", cfg, "--strike", "100"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("ArbitrageViolation"), std::string::npos);

    std::string rows;
    for (int i = 0; i < 60; ++i) {
        char date[16];
        std::snprintf(date, sizeof date, "2021-%02d-%02d", 1 + i / 28, 1 + i % 28);
        rows += std::string(date) + "," + (i % 2 ? "101" : "100") + "\n";
    }
    auto zigzag = write("zigzag.csv", rows);
    auto fit = call({"fit-ma1", "--input", zigzag});
    EXPECT_EQ(fit.code, 1);
    EXPECT_NE(fit.err.find("NoRealRoot"), std::string::npos);
}

TEST_F(Cli, NegativeDownMultiplierIsRejected) {
    auto cfg = write("t.json", R"({"s0": 100, "maturity": 1, "steps": 2, "mu": 0.0, "sigma": 1.5})");
    auto r = call({"price", "--tree-config", cfg, "--strike", "100"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("NegativePrice"), std::string::npos);
}

TEST_F(Cli, UnknownConfigKeyIsRejected) {
    auto cfg = write("t.json", R"({"s0": 100, "maturity": 1, "steps": 2, "mu": 0.0, "sigma": 0.2, "sigm": 1})");
    EXPECT_EQ(call({"build-tree", "--tree-config", cfg}).code, 2);
}

TEST_F(Cli, PriceAndBuildTree) {
    auto cfg = write("t.json", R"({"s0": 100, "maturity": 2, "steps": 2, "mu": 0.0, "sigma": 0.2})");
    auto r = call({"price", "--tree-config", cfg, "--strike", "100", "--nodes-output", path("nodes.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = nlohmann::json::parse(r.out);
    EXPECT_NEAR(j["value"].get<double>(), 11.0, 1e-12);
    EXPECT_NEAR(j["q_root"].get<double>(), 0.5, 1e-15);
    EXPECT_EQ(read(path("nodes.csv")).rfind("stage,path_bits,stock,value,delta\n", 0), 0u);

    auto tree = call({"build-tree", "--tree-config", cfg, "--format", "json"});
    ASSERT_EQ(tree.code, 0) << tree.err;
    auto t = nlohmann::json::parse(tree.out);
    EXPECT_NEAR(t["nodes"]["11"]["stock"].get<double>(), 144.0, 1e-9);

    auto ma = write("ma.json", R"({"s0": 10, "maturity": 2, "steps": 2, "model": "ma1",
        "params": {"c": 0, "theta": 0.5, "sigma_z": 1, "p1": 0.5}})");
    auto mt = call({"build-tree", "--tree-config", ma, "--format", "json"});
    ASSERT_EQ(mt.code, 0) << mt.err;
    EXPECT_NEAR(nlohmann::json::parse(mt.out)["nodes"]["11"]["stock"].get<double>(), 12.5, 1e-12);
}

TEST_F(Cli, AmericanPutHandExample) {
    auto cfg = write("t.json", R"({"s0": 100, "maturity": 1, "steps": 1, "mu": 0.05, "sigma": 0.2, "rate": 0.05})");
    auto r = call({"price", "--tree-config", cfg, "--option", "put", "--strike", "110", "--style", "amer"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(nlohmann::json::parse(r.out)["value"].get<double>(), 12.5 / 1.05, 1e-9);
}

TEST_F(Cli, FitAndSimulateRoundTrip) {
    auto sim = call({"simulate", "--sigma", "0.0", "--mu", "0", "--noise-q", "1", "--noise-std", "0.01", "--steps",
                     "50", "--seed", "3", "--output", path("p.csv"), "--components", path("c.csv")});
    ASSERT_EQ(sim.code, 0) << sim.err;
    auto prices = read(path("p.csv"));
    EXPECT_EQ(std::count(prices.begin(), prices.end(), '\n'), 51);
    EXPECT_EQ(read(path("c.csv")).rfind("index,efficient_log,noise\n", 0), 0u);
    auto fit = call({"fit-ma1", "--input", kPrices});
    ASSERT_EQ(fit.code, 0) << fit.err;
    auto j = nlohmann::json::parse(fit.out);
    EXPECT_EQ(j["kind"], "ma1");
    EXPECT_EQ(j["sample_size"], 3000);
}

TEST_F(Cli, ImpliedVolAndSummary) {
    auto r = call({"implied-vol", "--chain", kChain, "--spot", "100", "--rate", "0.03", "--output", path("iv.csv"),
                   "--summary", path("s.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    auto csv = read(path("iv.csv"));
    EXPECT_EQ(csv.rfind("expiry_years,strike,kind,market_price,implied_vol,status\n", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 31);
    auto s = nlohmann::json::parse(read(path("s.json")));
    EXPECT_EQ(s["solved"], 30);
    EXPECT_GT(s["flat_vol_mad"].get<double>(), 0.0);
}

TEST_F(Cli, RollingAndCompare) {
    auto r = call({"rolling", "--input", kPrices, "--horizon", "2", "--window", "1000", "--step", "1000"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1 + 3 * 4);
    auto c = call({"compare-bsm", "--n", "4,8"});
    ASSERT_EQ(c.code, 0) << c.err;
    EXPECT_EQ(c.out.rfind("N,tree_price,bsm_price,rel_err\n", 0), 0u);
}
