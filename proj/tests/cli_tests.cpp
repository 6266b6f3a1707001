// Integration tests that drive the built CLI binary end to end.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = ENRT_CLI_PATH;

fs::path work_dir() {
    const auto dir = fs::temp_directory_path() / "enrt_cli_tests";
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

fs::path fixture_csv() {
    const auto path = work_dir() / "units.csv";
    std::ostringstream csv;
    csv << "unit_id,role,ego_id,z,y,x_age,x_score\n";
    // 8 ego-networks, 2 alters each, deterministic synthetic values.
    for (int i = 1; i <= 8; ++i) {
        const int z = i % 2;
        csv << "e" << i << ",ego,e" << i << "," << z << "," << (0.5 * i + 2.0 * z) << ","
            << (20 + i) << "," << (i % 3) << "\n";
        for (int a = 1; a <= 2; ++a)
            csv << "a" << i << "_" << a << ",alter,e" << i << ",," << (0.25 * i + a + z) << ","
                << (30 - i) << "," << ((i + a) % 4) << "\n";
    }
    write_file(path, csv.str());
    return path;
}

}  // namespace

TEST_CASE("estimate with no contamination reproduces the naive rows") {
    const auto dir = work_dir() / "estimate_zero";
    fs::create_directories(dir);
    const auto csv = fixture_csv();
    const auto config = dir / "config.json";
    write_file(config, std::string(R"({
      "input": ")") + csv.string() + R"(",
      "p_z": 0.5,
      "seed": 42,
      "model": {"variant": "homogeneous_prob", "rho_e": 0.0, "rho_a": 0.0},
      "kappa": 1.0,
      "out": ")" + (dir / "out").string() + R"("
    })");
    REQUIRE(run_cli("estimate --config " + config.string()) == 0);

    const auto estimates = read_file(dir / "out" / "estimates.csv");
    REQUIRE(!estimates.empty());
    // naive and adjusted rows must carry identical numbers per estimand
    std::istringstream lines(estimates);
    std::string header, naive_ie, naive_de, adj_ie, adj_de;
    std::getline(lines, header);
    std::getline(lines, naive_ie);
    std::getline(lines, naive_de);
    std::getline(lines, adj_ie);
    std::getline(lines, adj_de);
    auto field = [](const std::string& line, int idx) {
        std::istringstream ss(line);
        std::string cell;
        for (int i = 0; i <= idx; ++i) std::getline(ss, cell, ',');
        return cell;
    };
    // point column is index 4
    CHECK(field(naive_ie, 4) == field(adj_ie, 4));
    CHECK(field(naive_de, 4) == field(adj_de, 4));
    CHECK(field(naive_ie, 3) == "IE");
    CHECK(field(adj_de, 3) == "DE");
    CHECK(fs::exists(dir / "out" / "manifest.json"));
    CHECK(fs::exists(dir / "out" / "summary.json"));
}

TEST_CASE("unknown config keys are rejected with exit code 1") {
    const auto dir = work_dir() / "strict";
    fs::create_directories(dir);
    const auto config = dir / "bad.json";
    write_file(config, R"({"inptu": "typo.csv"})");
    CHECK(run_cli("estimate --config " + config.string()) == 1);
}

TEST_CASE("missing input file exits with code 1") {
    const auto dir = work_dir() / "missing";
    fs::create_directories(dir);
    const auto config = dir / "config.json";
    write_file(config, std::string(R"({
      "input": ")") + (dir / "nope.csv").string() + R"(",
      "model": {"variant": "homogeneous_prob", "rho_e": 0.0, "rho_a": 0.0},
      "out": ")" + (dir / "out").string() + R"("
    })");
    CHECK(run_cli("estimate --config " + config.string()) == 1);
}

TEST_CASE("gsa output is byte-identical across reruns and thread counts") {
    const auto dir = work_dir() / "gsa_det";
    fs::create_directories(dir);
    const auto csv = fixture_csv();
    const auto config = dir / "config.json";
    write_file(config, std::string(R"({
      "input": ")") + csv.string() + R"(",
      "p_z": 0.5,
      "seed": 7,
      "grid": [
        {"model": {"variant": "homogeneous_count", "m_e": 2, "m_a": 3}, "kappa": 1.2},
        {"model": {"variant": "homogeneous_count", "m_e": 4, "m_a": 6}, "kappa": 1.6},
        {"model": {"variant": "heterogeneous_count", "m_e": 2, "m_a": 3,
                   "gamma_e": 1.0, "gamma_a": 1.0, "metric": "euclidean"}, "kappa": 2.0}
      ]
    })");
    REQUIRE(run_cli("gsa --config " + config.string() + " --out " + (dir / "a").string() +
                    " --threads 1") == 0);
    REQUIRE(run_cli("gsa --config " + config.string() + " --out " + (dir / "b").string() +
                    " --threads 2") == 0);
    CHECK(read_file(dir / "a" / "estimates.csv") == read_file(dir / "b" / "estimates.csv"));
    CHECK(!read_file(dir / "a" / "estimates.csv").empty());
}

TEST_CASE("pba with one point-mass draw matches the gsa point") {
    const auto dir = work_dir() / "pba_point";
    fs::create_directories(dir);
    const auto csv = fixture_csv();

    const auto gsa_config = dir / "gsa.json";
    write_file(gsa_config, std::string(R"({
      "input": ")") + csv.string() + R"(",
      "p_z": 0.5,
      "seed": 11,
      "grid": [{"model": {"variant": "homogeneous_count", "m_e": 2, "m_a": 3}, "kappa": 1.5}]
    })");
    REQUIRE(run_cli("gsa --config " + gsa_config.string() + " --out " + (dir / "gsa").string()) ==
            0);

    const auto pba_config = dir / "pba.json";
    write_file(pba_config, std::string(R"({
      "input": ")") + csv.string() + R"(",
      "p_z": 0.5,
      "seed": 11,
      "model": {"variant": "homogeneous_count", "m_e": 2, "m_a": 3},
      "kappa": 1.5,
      "priors": {"m_a": {"dist": "point_mass", "value": 3}},
      "pba": {"draws": 1, "statistical_uncertainty": false}
    })");
    REQUIRE(run_cli("pba --config " + pba_config.string() + " --out " + (dir / "pba").string()) ==
            0);

    // Compare the IE point value between the two outputs.
    const std::string gsa_csv = read_file(dir / "gsa" / "estimates.csv");
    const std::string pba_csv = read_file(dir / "pba" / "estimates.csv");
    auto grab = [](const std::string& content, int line_no, int field_idx) {
        std::istringstream lines(content);
        std::string line;
        for (int i = 0; i <= line_no; ++i) std::getline(lines, line);
        std::istringstream ss(line);
        std::string cell;
        for (int i = 0; i <= field_idx; ++i) std::getline(ss, cell, ',');
        return cell;
    };
    // gsa columns: row,estimator,augmented,estimand,point,...  pba: draw,ok,estimand,value,point,...
    CHECK(grab(gsa_csv, 1, 4) == grab(pba_csv, 1, 3));
    CHECK(grab(gsa_csv, 2, 4) == grab(pba_csv, 2, 3));
}

TEST_CASE("pba reruns are byte-identical") {
    const auto dir = work_dir() / "pba_det";
    fs::create_directories(dir);
    const auto csv = fixture_csv();
    const auto config = dir / "config.json";
    write_file(config, std::string(R"({
      "input": ")") + csv.string() + R"(",
      "p_z": 0.5,
      "seed": 3,
      "model": {"variant": "homogeneous_count", "m_e": 2, "m_a": 3},
      "kappa": 1.5,
      "priors": {
        "m_a": {"dist": "poisson", "mean": 4},
        "kappa": {"dist": "log_normal", "meanlog": 0.6931471805599453, "sdlog": 0.2}
      },
      "pba": {"draws": 40, "statistical_uncertainty": true}
    })");
    REQUIRE(run_cli("pba --config " + config.string() + " --out " + (dir / "a").string()) == 0);
    REQUIRE(run_cli("pba --config " + config.string() + " --out " + (dir / "b").string() +
                    " --threads 2") == 0);
    CHECK(read_file(dir / "a" / "estimates.csv") == read_file(dir / "b" / "estimates.csv"));
}

TEST_CASE("simulate emits the report table and is reproducible") {
    const auto dir = work_dir() / "simulate";
    fs::create_directories(dir);
    const auto config = dir / "config.json";
    write_file(config, R"({
      "seed": 5,
      "simulate": {
        "n_e": 24, "alters_per_ego": 2, "m_a": 8, "m_e": 6, "gamma": 1.0,
        "p_z": 0.5, "reps": 60,
        "estimators": ["naive", "heterogeneous", "homogeneous", "heterogeneous_augmented"]
      }
    })");
    REQUIRE(run_cli("simulate --config " + config.string() + " --out " + (dir / "a").string()) ==
            0);
    REQUIRE(run_cli("simulate --config " + config.string() + " --out " + (dir / "b").string()) ==
            0);
    const std::string report = read_file(dir / "a" / "estimates.csv");
    CHECK(report == read_file(dir / "b" / "estimates.csv"));
    std::istringstream lines(report);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "estimand,scenario,specification,augmented,bias,coverage,sd_se");
    int rows = 0;
    for (std::string line; std::getline(lines, line);)
        if (!line.empty()) ++rows;
    CHECK(rows == 8);  // 4 roster entries x 2 estimands
}

TEST_CASE("command mismatch between config and subcommand fails validation") {
    const auto dir = work_dir() / "mismatch";
    fs::create_directories(dir);
    const auto config = dir / "config.json";
    write_file(config, R"({"command": "gsa"})");
    CHECK(run_cli("estimate --config " + config.string()) == 1);
}
