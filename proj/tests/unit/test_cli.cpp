#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include <sys/wait.h>

#include <kslight/errors.hpp>
#include <kslight/io.hpp>
#include <kslight_cli/cli.hpp>
#include <kslight_cli/state_spec.hpp>

namespace fs = std::filesystem;
using kslight::cli::dispatch;
using kslight::cli::parse_state_spec;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

// Fresh output directory wired through KSLIGHT_OUT_DIR.
class CliRun : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("kslight_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        setenv("KSLIGHT_OUT_DIR", dir_.c_str(), 1);
    }
    void TearDown() override {
        unsetenv("KSLIGHT_OUT_DIR");
        fs::remove_all(dir_);
    }
    int run(const std::vector<std::string>& args) {
        out_.str("");
        err_.str("");
        return dispatch(args, out_, err_);
    }
    [[nodiscard]] std::size_t file_count() const {
        return static_cast<std::size_t>(std::distance(fs::directory_iterator(dir_), fs::directory_iterator{}));
    }

    fs::path dir_;
    std::ostringstream out_;
    std::ostringstream err_;
};

}  // namespace

TEST(StateSpec, Families) {
    const auto c = parse_state_spec("coherent: 4,0, 0,4");
    EXPECT_EQ(c.modes(), 2);
    EXPECT_NEAR(kslight::mean_photon_number(c, 1), 16.0, 1e-6);
    const auto n = parse_state_spec("noon:3", 5);
    EXPECT_EQ(n.cutoff(), 5);
    EXPECT_NEAR(std::norm(n.at({3, 0})), 0.5, 1e-14);
    const auto f = parse_state_spec("fock-list: 0,0=0.6,0; 1,1=0,0.8");
    EXPECT_EQ(f.cutoff(), 1);
    EXPECT_NEAR(f.at({1, 1}).imag(), 0.8, 1e-14);
    EXPECT_NO_THROW((void)parse_state_spec("fock-list: 2,0=1,0;"));
}

TEST(StateSpec, Errors) {
    try {
        (void)parse_state_spec("coherent:1,2,x,4");
        FAIL();
    } catch (const kslight::ParseError& e) {
        EXPECT_EQ(e.position(), 13u);
    }
    EXPECT_THROW((void)parse_state_spec("noon 2"), kslight::ParseError);
    EXPECT_THROW((void)parse_state_spec("squeezed:1"), kslight::ParseError);
    EXPECT_THROW((void)parse_state_spec("noon:2 junk"), kslight::ParseError);
    EXPECT_THROW((void)parse_state_spec("fock-list: 0,0=1,0; 1,1=1,0"), kslight::NormalizationError);
}

TEST_F(CliRun, UsageErrorsWriteNothing) {
    EXPECT_EQ(run({"solve", "--bogus", "1"}), kslight::cli::kExitUsage);
    EXPECT_NE(err_.str().find("usage: kslight"), std::string::npos);
    EXPECT_EQ(run({"frobnicate"}), kslight::cli::kExitUsage);
    EXPECT_EQ(run({}), kslight::cli::kExitUsage);
    EXPECT_EQ(run({"homodyne", "--sign", "2"}), kslight::cli::kExitUsage);
    EXPECT_EQ(file_count(), 0u);
    EXPECT_EQ(run({"--version"}), kslight::cli::kExitOk);
    EXPECT_EQ(out_.str(), "kslight 0.1.0\n");
}

TEST_F(CliRun, SolveWritesResultAndManifest) {
    ASSERT_EQ(run({"solve", "--theta", "1.5707963", "--phi", "0"}), kslight::cli::kExitOk) << err_.str();
    const auto j = nlohmann::json::parse(slurp(dir_ / "solve.json"));
    EXPECT_LT(j.at("distance").get<double>(), 1e-8);
    const auto m = nlohmann::json::parse(slurp(dir_ / "solve.json.manifest.json"));
    EXPECT_EQ(m.at("tool"), "kslight");
    EXPECT_EQ(m.at("subcommand"), "solve");
    EXPECT_TRUE(m.at("seed").is_null());
    EXPECT_EQ(m.at("config").at("theta"), "1.5707963");
    EXPECT_GE(m.at("duration_seconds").get<double>(), 0.0);
}

TEST_F(CliRun, FlagsOverrideConfig) {
    const fs::path cfg = dir_ / "run.cfg";
    std::ofstream(cfg) << "# campaign\nsamples = 500\nseed=3\nchi-count=4\n";
    ASSERT_EQ(run({"homodyne", "--config", cfg.string(), "--seed", "9", "--state", "noon:2"}), 0) << err_.str();
    const auto m = nlohmann::json::parse(slurp(dir_ / "homodyne.csv.manifest.json"));
    EXPECT_EQ(m.at("seed").get<int>(), 9);
    EXPECT_EQ(m.at("config").at("samples"), "500");
    const std::string csv = slurp(dir_ / "homodyne.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 501);
}

TEST_F(CliRun, RerunIsByteIdentical) {
    const std::vector<std::string> args{"homodyne", "--state", "coherent:1,0,0,1", "--samples", "3000", "--seed", "17"};
    ASSERT_EQ(run(args), 0) << err_.str();
    const std::string first = slurp(dir_ / "homodyne.csv");
    ASSERT_EQ(run(args), 0);
    EXPECT_EQ(slurp(dir_ / "homodyne.csv"), first);
    auto with_workers = args;
    with_workers.insert(with_workers.end(), {"--workers", "3"});
    ASSERT_EQ(run(with_workers), 0);
    EXPECT_EQ(slurp(dir_ / "homodyne.csv"), first);
}

TEST_F(CliRun, PipelineThroughReconstruct) {
    ASSERT_EQ(run({"homodyne", "--state", "coherent:2,0,0,2", "--samples", "20000", "--chi-count", "16"}), 0);
    ASSERT_EQ(run({"reconstruct", "--in", (dir_ / "homodyne.csv").string(), "--bins", "41"}), 0) << err_.str();
    const auto fit = nlohmann::json::parse(slurp(dir_ / "reconstruct.csv.fit.json"));
    EXPECT_TRUE(fit.is_object());
    const std::string hist = slurp(dir_ / "reconstruct.csv");
    EXPECT_EQ(hist.substr(0, hist.find('\n')), "e1,e2,density");
}

TEST_F(CliRun, DomainErrorsExitOne) {
    EXPECT_EQ(run({"state", "--state", "fock-list: 0,0=2,0"}), kslight::cli::kExitDomainError);
    EXPECT_NE(err_.str().find("NormalizationError"), std::string::npos);
    EXPECT_EQ(run({"reconstruct", "--in", (dir_ / "missing.csv").string()}), kslight::cli::kExitDomainError);
    EXPECT_EQ(file_count(), 0u);
}

TEST_F(CliRun, WeakAndStateOutputs) {
    ASSERT_EQ(run({"weak", "--p-bins", "161"}), 0) << err_.str();
    EXPECT_TRUE(fs::exists(dir_ / "weak.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "weak_surface.csv.manifest.json"));
    ASSERT_EQ(run({"state", "--state", "noon:2", "--axis", "P", "--wave-points", "11"}), 0) << err_.str();
    EXPECT_EQ(kslight::state_from_json(slurp(dir_ / "state.json")).cutoff(), 2);
    EXPECT_TRUE(fs::exists(dir_ / "state_wavefunction.csv"));
}

TEST(CliBinary, ExitCodes) {
    const std::string bin = KSLIGHT_CLI_PATH;
    EXPECT_EQ(std::system((bin + " --version > /dev/null").c_str()), 0);
    const int usage = std::system((bin + " solve --nope > /dev/null 2>&1").c_str());
    ASSERT_TRUE(WIFEXITED(usage));
    EXPECT_EQ(WEXITSTATUS(usage), 2);
}
