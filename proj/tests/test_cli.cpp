#include <catch2/catch.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

#include "delaystab/config.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = DELAYSTAB_CLI_PATH;
const std::string kConfigDir = DELAYSTAB_CONFIG_DIR;

int run_cli(const std::string& args) {
    const std::string command = kCli + " " + args + " > /dev/null 2>&1";
    const int status = std::system(command.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

fs::path write_temp(const std::string& name, const nlohmann::json& doc) {
    const fs::path path = fs::temp_directory_path() / name;
    std::ofstream out(path, std::ios::binary);
    out << doc.dump(2);
    return path;
}

nlohmann::json example_doc() {
    std::ifstream in(kConfigDir + "/example.json", std::ios::binary);
    REQUIRE(in);
    return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("certify exits 0 on the bundled example") {
    CHECK(run_cli("certify " + kConfigDir + "/example.json") == 0);
}

TEST_CASE("certify exits 1 when the lag bound is inflated") {
    nlohmann::json doc = example_doc();
    doc["system"]["h1"]["max_lag"] = 10.0;
    const auto path = write_temp("delaystab_cli_tau10.json", doc);
    CHECK(run_cli("certify " + path.string()) == 1);
}

TEST_CASE("validate exits 1 when a declared bound is falsified") {
    nlohmann::json doc = example_doc();
    doc["system"]["a2"]["lower"] = 0.21;  // the sampled coefficient dips to 0.2
    const auto path = write_temp("delaystab_cli_dip.json", doc);
    CHECK(run_cli("validate " + path.string()) == 1);
}

TEST_CASE("errors exit 2") {
    CHECK(run_cli("certify /nonexistent/config.json") == 2);
    CHECK(run_cli("no-such-command " + kConfigDir + "/example.json") == 2);

    nlohmann::json doc = example_doc();
    doc["system"].erase("b1");
    const auto path = write_temp("delaystab_cli_missing.json", doc);
    CHECK(run_cli("certify " + path.string()) == 2);
}

TEST_CASE("certify-corollary rejects the delayed example with exit 2") {
    CHECK(run_cli("certify-corollary " + kConfigDir + "/example.json") == 2);
    CHECK(run_cli("certify-corollary " + kConfigDir + "/corollary_example.json") == 0);
}

TEST_CASE("simulate writes the trajectory CSV") {
    nlohmann::json doc = example_doc();
    const fs::path csv = fs::temp_directory_path() / "delaystab_cli_traj.csv";
    fs::remove(csv);
    doc["numerics"]["t_end"] = 5.0;
    doc["outputs"]["trajectory_csv"] = csv.string();
    const auto path = write_temp("delaystab_cli_sim.json", doc);
    CHECK(run_cli("simulate " + path.string()) == 0);
    REQUIRE(fs::exists(csv));
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,x,dx,ddx,u,du");
}

TEST_CASE("decay command reports a positive rate for the example") {
    nlohmann::json doc = example_doc();
    doc["numerics"]["t_end"] = 150.0;
    doc["numerics"]["step"] = 0.01;
    const fs::path report = fs::temp_directory_path() / "delaystab_cli_decay.json";
    const fs::path plot = fs::temp_directory_path() / "delaystab_cli_decay.dat";
    fs::remove(plot);
    doc["outputs"]["plot_data"] = plot.string();
    const auto path = write_temp("delaystab_cli_decay_cfg.json", doc);
    CHECK(run_cli("decay " + path.string() + " --out " + report.string()) == 0);
    std::ifstream in(report);
    REQUIRE(in);
    const auto out = nlohmann::json::parse(in);
    CHECK(out["verdict"] == "decaying");
    CHECK(out["decay"]["mu"].get<double>() > 0.0);
    CHECK(out["metadata"]["config_sha256"].is_string());

    // two-column plot data: window midpoint, log envelope
    std::ifstream plot_in(plot);
    REQUIRE(plot_in);
    double midpoint = 0.0, log_env = 1.0;
    int rows = 0;
    while (plot_in >> midpoint >> log_env) ++rows;
    CHECK(rows == out["decay"]["windows_used"].get<int>());
    CHECK(log_env < 0.0);  // final envelope point is well below 1
}

TEST_CASE("apriori command passes under unit forcing") {
    nlohmann::json doc = example_doc();
    doc["forcing"]["f1"] = {{"expr", "1"}, {"bound", 1.0}};
    doc["numerics"]["t_end"] = 100.0;
    doc["numerics"]["step"] = 0.01;
    const auto path = write_temp("delaystab_cli_apriori.json", doc);
    CHECK(run_cli("apriori " + path.string()) == 0);
}
