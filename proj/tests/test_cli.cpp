#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
    int code = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("latgp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path path(const std::string& name) const { return dir_ / name; }

    Result run(const std::string& args) const {
        const fs::path out = path("stdout.txt"), err = path("stderr.txt");
        const std::string cmd = std::string("\"") + LATGP_CLI + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                                err.string() + "\"";
        const int status = std::system(cmd.c_str());
        Result r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

    void write(const std::string& name, const std::string& content) const { std::ofstream(path(name)) << content; }

    fs::path dir_;
};

const std::string kDemo = LATGP_DEMO_DIR;

TEST_F(Cli, EstimateExampleNetwork) {
    const Result r = run("estimate --network " + kDemo + "/network_3x56.json --hw " + kDemo + "/hw_reference.json");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("Total latency: 0.4294742857 ms"), std::string::npos) << r.out;

    const Result j = run("estimate --format json --network " + kDemo + "/network_3x56.json --hw " + kDemo +
                         "/hw_reference.json");
    ASSERT_EQ(j.code, 0) << j.err;
    EXPECT_NEAR(json::parse(j.out)["total_ms"].get<double>(), 0.42947, 1e-5);
}

TEST_F(Cli, EstimateEmptyNetwork) {
    write("empty.json", "[]");
    const Result r = run("estimate --network " + path("empty.json").string() + " --hw " + kDemo + "/hw_reference.json");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("empty network"), std::string::npos) << r.err;
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("estimate --network x.json").code, 1);
    EXPECT_EQ(run("fit --data a.csv --model m.json --kernel matern52").code, 1);
    EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, SynthSingleRow) {
    const Result r = run("synth --seed 1 --count 1 --out " + path("one.csv").string());
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string text = slurp(path("one.csv"));
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
    EXPECT_EQ(text.rfind("h,w,h_o,w_o,k,f,c,", 0), 0u);
}

TEST_F(Cli, SynthIsDeterministic) {
    ASSERT_EQ(run("synth --seed 42 --count 156 --out " + path("a.csv").string()).code, 0);
    ASSERT_EQ(run("synth --seed 42 --count 156 --out " + path("b.csv").string()).code, 0);
    const std::string a = slurp(path("a.csv"));
    EXPECT_EQ(a, slurp(path("b.csv")));
    EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 157);
}

TEST_F(Cli, SynthUnwritablePath) {
    const Result r = run("synth --seed 1 --count 5 --out " + path("missing/dir/x.csv").string());
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("cannot write"), std::string::npos) << r.err;
}

TEST_F(Cli, FitPredictInterpolates) {
    const std::string data = path("train.csv").string(), model = path("model.json").string();
    ASSERT_EQ(run("synth --seed 3 --count 30 --out " + data).code, 0);
    const Result f = run("fit --data " + data + " --model " + model +
                         " --kernel matern32 --lengthscales 1 --signal-factors 1 --noise-factors 1e-10 --threads 1");
    ASSERT_EQ(f.code, 0) << f.err;
    EXPECT_EQ(json::parse(slurp(path("model.json")))["format"], "latgp-model/1");

    const Result p = run("predict --format json --data " + data + " --model " + model);
    ASSERT_EQ(p.code, 0) << p.err;
    const json rows = json::parse(p.out)["predictions"];
    ASSERT_EQ(rows.size(), 30u);
    for (const auto& row : rows) {
        const double target = row["target_ms"], mean = row["mean_ms"];
        EXPECT_LT(std::abs(mean - target), 1e-3 * target);
        EXPECT_GE(row["variance_ms2"].get<double>(), 0.0);
    }
}

TEST_F(Cli, PredictRejectsMalformedFile) {
    const std::string data = path("train.csv").string(), model = path("model.json").string();
    ASSERT_EQ(run("synth --seed 4 --count 10 --out " + data).code, 0);
    ASSERT_EQ(run("fit --data " + data + " --model " + model +
                  " --kernel rbf --lengthscales 1 --signal-factors 1 --noise-factors 0.01 --threads 1")
                  .code,
              0);
    // drop the dw_bits column: 15 cells, 13 layer/hardware features
    std::istringstream in(slurp(path("train.csv")));
    std::ostringstream cut;
    for (std::string line; std::getline(in, line);) {
        std::size_t pos = 0;
        for (int i = 0; i < 13; ++i) pos = line.find(',', pos) + 1;
        const std::size_t end = line.find(',', pos);
        cut << line.substr(0, pos) << line.substr(end + 1) << '\n';
    }
    write("short.csv", cut.str());
    const Result r = run("predict --data " + path("short.csv").string() + " --model " + model);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("missing column 'dw_bits'"), std::string::npos) << r.err;

    json j = json::parse(slurp(path("model.json")));
    j["format"] = "latgp-model/9";
    write("future.json", j.dump());
    const Result v = run("predict --data " + data + " --model " + path("future.json").string());
    EXPECT_EQ(v.code, 2);
    EXPECT_NE(v.err.find("unsupported model format"), std::string::npos) << v.err;
}

TEST_F(Cli, AnalyticMeanOnUndistortedDataLeavesNoResidual) {
    const std::string data = path("clean.csv").string(), model = path("model.json").string();
    ASSERT_EQ(run("synth --seed 5 --count 25 --distortion none --out " + data).code, 0);
    ASSERT_EQ(run("fit --mean analytic --data " + data + " --model " + model +
                  " --lengthscales 1 --signal-factors 1 --noise-factors 0.01 --threads 1")
                  .code,
              0);
    const json j = json::parse(slurp(path("model.json")));
    ASSERT_EQ(j["train_residuals"].size(), 25u);
    for (const auto& r : j["train_residuals"]) EXPECT_LT(std::abs(r.get<double>()), 1e-12);
}

TEST_F(Cli, LinearModelRoundTrip) {
    const std::string data = path("d.csv").string(), model = path("lin.json").string();
    ASSERT_EQ(run("synth --seed 6 --count 40 --out " + data).code, 0);
    ASSERT_EQ(run("fit --method linreg --data " + data + " --model " + model).code, 0);
    const Result p = run("predict --format csv --data " + data + " --model " + model);
    ASSERT_EQ(p.code, 0) << p.err;
    EXPECT_EQ(p.out.rfind("index,mean_ms,variance_ms2,target_ms\n", 0), 0u);
}

TEST_F(Cli, LoocvIsByteStable) {
    const std::string data = path("d.csv").string();
    ASSERT_EQ(run("synth --seed 7 --count 50 --out " + data).code, 0);
    const Result a = run("loocv --method analytic --data " + data);
    const Result b = run("loocv --method analytic --data " + data);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out.find("Standard analytic method"), std::string::npos) << a.out;
}

TEST_F(Cli, CompareReportIsConsistent) {
    const std::string data = path("d.csv").string(), report = path("report.json").string();
    ASSERT_EQ(run("synth --seed 8 --count 40 --out " + data).code, 0);
    const std::string grid = " --lengthscales 1,3 --signal-factors 1 --noise-factors 0.01";
    const Result r = run("compare --format json --threads 1 --data " + data + grid + " --out " + report +
                         " --errors-csv " + path("errors.csv").string());
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_EQ(j, json::parse(slurp(path("report.json"))));
    ASSERT_EQ(j["methods"].size(), 4u);
    double prev = 0.0;
    for (const auto& m : j["methods"]) {
        double sum = 0.0;
        for (const auto& e : m["abs_errors_ms"]) sum += e.get<double>();
        const double mae = m["mae_ms"];
        EXPECT_NEAR(mae, sum / 40.0, 1e-15 * std::max(1.0, sum));
        EXPECT_GE(mae, prev);
        prev = mae;
    }
    const std::string csv = slurp(path("errors.csv"));
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 41);

    const Result threaded = run("compare --format json --threads 3 --data " + data + grid);
    EXPECT_EQ(threaded.out, r.out);
}

TEST_F(Cli, MissingDataFile) {
    const Result r = run("loocv --method analytic --data " + path("nope.csv").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("cannot open"), std::string::npos);
}

}  // namespace
