#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "enrt/rng.hpp"
#include "enrt/sample.hpp"
#include "helpers.hpp"

using namespace enrt;

namespace {

std::string write_fixture(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path.string();
}

}  // namespace

TEST_CASE("loads a two-ego three-alter sample") {
    const auto path = write_fixture("units_basic.csv",
                                    "unit_id,role,ego_id,z,y,x_age\n"
                                    "e1,ego,e1,1,2.5,30\n"
                                    "a1,alter,e1,,1.0,25\n"
                                    "a2,alter,e1,,0.5,40\n"
                                    "e2,ego,e2,0,-1.0,50\n"
                                    "a3,alter,e2,,3.0,35\n");
    const auto s = load_sample(path, 0.5);
    CHECK(s.n_e() == 2);
    CHECK(s.n_a() == 3);
    CHECK(s.covariate_names == std::vector<std::string>{"x_age"});
    CHECK(s.covariates(0, 0) == 30);
    CHECK(s.units[s.alter_units[2]].ego_id == "e2");
    CHECK(s.alter_ego[2] == 1);
    CHECK(validate_sample(s).empty());
}

TEST_CASE("degenerate star: one ego, no alters") {
    const auto path = write_fixture("units_single.csv",
                                    "unit_id,role,ego_id,z,y\n"
                                    "e1,ego,e1,0,0.0\n");
    const auto s = load_sample(path, 0.3);
    CHECK(s.n_e() == 1);
    CHECK(s.n_a() == 0);
}

TEST_CASE("rejects malformed rows with row numbers") {
    SUBCASE("alter carries treatment") {
        const auto path = write_fixture("units_bad_alter.csv",
                                        "unit_id,role,ego_id,z,y\n"
                                        "e1,ego,e1,1,0\n"
                                        "a1,alter,e1,1,0\n");
        CHECK_THROWS_WITH_AS(load_sample(path, 0.5),
                             doctest::Contains("row 3: alter carries treatment"),
                             std::runtime_error);
    }
    SUBCASE("ego without treatment") {
        const auto path = write_fixture("units_no_z.csv",
                                        "unit_id,role,ego_id,z,y\n"
                                        "e1,ego,e1,,0\n");
        CHECK_THROWS_WITH_AS(load_sample(path, 0.5), doctest::Contains("row 2"),
                             std::runtime_error);
    }
    SUBCASE("non-binary z") {
        const auto path = write_fixture("units_bad_z.csv",
                                        "unit_id,role,ego_id,z,y\n"
                                        "e1,ego,e1,2,0\n");
        CHECK_THROWS_WITH_AS(load_sample(path, 0.5), doctest::Contains("non-binary"),
                             std::runtime_error);
    }
    SUBCASE("duplicate unit id") {
        const auto path = write_fixture("units_dup.csv",
                                        "unit_id,role,ego_id,z,y\n"
                                        "e1,ego,e1,1,0\n"
                                        "e1,ego,e1,0,0\n");
        CHECK_THROWS_WITH_AS(load_sample(path, 0.5), doctest::Contains("duplicate unit_id"),
                             std::runtime_error);
    }
    SUBCASE("unknown ego reference") {
        const auto path = write_fixture("units_unknown_ego.csv",
                                        "unit_id,role,ego_id,z,y\n"
                                        "e1,ego,e1,1,0\n"
                                        "a1,alter,e9,,0\n");
        CHECK_THROWS_WITH_AS(load_sample(path, 0.5), doctest::Contains("e9"), std::runtime_error);
    }
    SUBCASE("wrong field count") {
        const auto path = write_fixture("units_short_row.csv",
                                        "unit_id,role,ego_id,z,y\n"
                                        "e1,ego,e1,1\n");
        CHECK_THROWS_WITH_AS(load_sample(path, 0.5), doctest::Contains("row 2"),
                             std::runtime_error);
    }
}

TEST_CASE("validate_sample reports mutated violations") {
    auto s = testutil::make_star_sample({2, 1}, 0.5);
    CHECK(validate_sample(s).empty());

    SUBCASE("ego missing treatment") {
        s.units[s.ego_units[0]].treatment.reset();
        const auto report = validate_sample(s);
        REQUIRE(report.size() == 1);
        CHECK(report[0].field == "z");
    }
    SUBCASE("alter referencing missing ego") {
        s.units[s.alter_units[0]].ego_id = "ghost";
        const auto report = validate_sample(s);
        REQUIRE(report.size() == 1);
        CHECK(report[0].message.find("ghost") != std::string::npos);
        CHECK(report[0].row == s.units[s.alter_units[0]].source_row);
    }
    SUBCASE("covariate dimension mismatch") {
        s.covariates = Eigen::MatrixXd::Zero(1, 2);
        CHECK(!validate_sample(s).empty());
    }
    SUBCASE("p_z outside the open interval") {
        s.p_z = 1.0;
        CHECK(!validate_sample(s).empty());
    }
}

TEST_CASE("observed exposures propagate the ego treatment down the star") {
    auto s = testutil::make_star_sample({2, 1}, 0.5);
    s.units[s.ego_units[0]].treatment = 1;
    s.units[s.ego_units[1]].treatment = 0;
    const auto exp = observed_exposures(s);
    CHECK(exp.alter[0] == 1.0);
    CHECK(exp.alter[1] == 1.0);
    // The alter recruited by the control ego stays unexposed in the observed
    // network regardless of any latent edge to the treated ego.
    CHECK(exp.alter[2] == 0.0);

    s.units[s.ego_units[0]].treatment = 0;
    const auto all_control = observed_exposures(s);
    CHECK(all_control.alter.sum() == 0.0);
}

TEST_CASE("observed exposure total equals alters under treated egos") {
    enrt::rng::Stream stream(99, 0);
    for (int trial = 0; trial < 20; ++trial) {
        auto inst = testutil::random_instance(stream, 6, 8);
        auto& s = inst.net.sample;
        long expected = 0;
        for (int i = 0; i < s.n_e(); ++i) {
            const bool treated = stream.bernoulli(s.p_z);
            s.units[s.ego_units[i]].treatment = treated ? 1 : 0;
            if (treated) expected += static_cast<long>(s.ego_alters[i].size());
        }
        const auto exp = observed_exposures(s);
        CHECK(static_cast<long>(exp.alter.sum()) == expected);
        // Deterministic and idempotent.
        CHECK(observed_exposures(s).alter == exp.alter);
    }
}

TEST_CASE("alter exposure frequency converges to p_z") {
    auto s = testutil::make_star_sample({2, 3, 1}, 0.37);
    enrt::rng::Stream stream(7, 0);
    const int reps = 100000;
    Eigen::VectorXd freq = Eigen::VectorXd::Zero(s.n_a());
    for (int r = 0; r < reps; ++r) {
        for (int i = 0; i < s.n_e(); ++i)
            s.units[s.ego_units[i]].treatment = stream.bernoulli(s.p_z) ? 1 : 0;
        freq += observed_exposures(s).alter;
    }
    freq /= static_cast<double>(reps);
    const double se = std::sqrt(0.37 * 0.63 / reps);
    for (int a = 0; a < s.n_a(); ++a) CHECK(std::abs(freq[a] - 0.37) < 3.0 * se);
}
