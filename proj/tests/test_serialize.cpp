#include <catch2/catch_amalgamated.hpp>

#include "infinifree/serialize.hpp"
#include "infinifree/subordination.hpp"
#include "test_support.hpp"

using namespace infinifree;

TEST_CASE("law json round trip") {
    SECTION("semicircle") {
        InfLaw sc = InfLaw::semicircle(0.3, 1.5, 12);
        InfLaw back = law_from_json(law_to_json(sc));
        CHECK(back.kind() == LawKind::Semicircle);
        CHECK(back.mean() == 0.3);
        CHECK(back.variance() == 1.5);
        CHECK(back.max_order() == 12);
        for (int k = 0; k <= 12; ++k)
            CHECK(back.std_moments()[k] == Catch::Approx(sc.std_moments()[k]).margin(1e-14));
    }
    SECTION("atomic with infinitesimal weights") {
        InfLaw at = InfLaw::atomic({{0.0, 1.0, -1.0}, {2.0, 0.0, 1.0}}, 10);
        InfLaw back = law_from_json(law_to_json(at));
        CHECK(back.kind() == LawKind::Atomic);
        CHECK(back.atoms().size() == 2);
        CHECK(back.inf_moments()[3] == Catch::Approx(8.0));
    }
    SECTION("moment table") {
        auto eng = testsupport::rng(7);
        InfLaw mt = testsupport::random_moment_law(eng, 10);
        InfLaw back = law_from_json(law_to_json(mt));
        CHECK(back.kind() == LawKind::MomentTable);
        for (int k = 0; k <= 10; ++k) {
            CHECK(back.std_moments()[k] == mt.std_moments()[k]);
            CHECK(back.inf_moments()[k] == mt.inf_moments()[k]);
        }
    }
    SECTION("malformed input") {
        CHECK_THROWS_AS(law_from_json(json::parse(R"({"kind":"nope"})")), ConfigError);
        CHECK_THROWS_AS(law_from_json(json::parse(R"({"atoms":[]})")), ConfigError);
        CHECK_THROWS_AS(law_from_json(json::parse(R"({"kind":"atomic","atoms":[[0,0.5,0]]})")),
                        ConfigError);
    }
}

TEST_CASE("matrix json round trip") {
    auto eng = testsupport::rng(8);
    Matrix m = testsupport::random_matrix(eng, 3);
    Matrix back = matrix_from_json(matrix_to_json(m), 3);
    CHECK((m - back).norm() == 0.0);
    CHECK_THROWS_AS(matrix_from_json(json::array(), 2), ConfigError);
}

TEST_CASE("free joint config") {
    json j = json::parse(R"({
      "kind": "free_joint",
      "order": 6,
      "variables": [
        {"name": "x", "group": 1, "law": {"kind": "semicircle", "variance": 1}},
        {"name": "y", "group": 2,
         "law": {"kind": "atomic", "atoms": [[0, 1, -1], [2, 0, 1]]}}
      ]})");
    JointLawConfig cfg = joint_from_json(j);
    CHECK(cfg.names == std::vector<std::string>{"x", "y"});
    auto oracle = cfg.oracle();
    // phi(xy) = phi(x) phi(y) = 0
    CHECK(std::abs(oracle.moment(std::vector<int>{0, 1})(0, 0)) < 1e-12);
    // phi'(y) = theta
    CHECK(std::abs(oracle.inf_moment(std::vector<int>{1})(0, 0) - cx(2, 0)) < 1e-12);
    CHECK_THROWS_AS(joint_from_json(json::parse(R"({"kind":"free_joint","variables":[]})")),
                    ConfigError);
}

TEST_CASE("cumulant entry serialization") {
    InfLaw sc = InfLaw::semicircle(0, 1);
    auto fam = cumulants_from_moments(sc.oracle(), {0}, 4);
    json entries = cumulant_entries_to_json(fam, 4);
    REQUIRE(entries.size() == 4);
    CHECK(entries[0]["order"] == 1);
    CHECK(entries[1]["order"] == 2);
    CHECK(entries[1]["std"][0][0].get<double>() == Catch::Approx(1.0)); // kappa_2 = 1
    CHECK(std::abs(entries[3]["std"][0][0].get<double>()) < 1e-12);     // kappa_4 = 0
}

TEST_CASE("operator-valued law configs") {
    SECTION("scalar and diagonal lift kinds") {
        json j = json::parse(R"({
          "kind": "diagonal_lift", "d": 2, "K": 20,
          "law": {"kind": "semicircle", "variance": 1, "max_order": 24}})");
        OVLaw law = ov_law_from_json(j);
        CHECK(law.dim() == 2);
        Matrix b = cx(0, 8) * Matrix::Identity(2, 2);
        InfLaw sc = InfLaw::semicircle(0, 1);
        cx want = sc.cauchy_G(DualScalar(cx(0, 8))).std;
        CHECK((law.cauchy_G(DualMatrix(b)).std - want * Matrix::Identity(2, 2)).norm() < 1e-10);
    }
    SECTION("cumulant family kind at d = 1") {
        json j = json::parse(R"({
          "kind": "cumulant_family", "d": 1, "M": 2.0, "K": 20,
          "kappa":  [0, 0, 1, 0, 0],
          "dkappa": [0, 1, 0, 0, 0]})");
        OVLaw law = ov_law_from_json(j);
        // kappa_2 = 1 is the standard semicircle; dkappa_1 = 1 shifts g
        Matrix b(1, 1);
        b(0, 0) = cx(0, 8);
        InfLaw sc = InfLaw::semicircle(0, 1);
        CHECK(std::abs(law.cauchy_G(DualMatrix(b)).std(0, 0) -
                       sc.cauchy_G(DualScalar(cx(0, 8))).std) < 1e-9);
        CHECK(std::abs(law.inf_cauchy_g(b)(0, 0)) > 1e-4); // nonzero infinitesimal part
    }
    SECTION("scalar lift config") {
        json j = json::parse(R"({
          "kind": "scalar_lift", "N": 2, "K": 6,
          "joint": {"kind": "free_joint", "order": 4, "variables": [
            {"name": "a", "group": 1, "law": {"kind": "semicircle", "variance": 1}},
            {"name": "b", "group": 1, "law": {"kind": "semicircle", "variance": 1}},
            {"name": "c", "group": 2, "law": {"kind": "semicircle", "variance": 1}},
            {"name": "d", "group": 2, "law": {"kind": "semicircle", "variance": 1}}
          ]},
          "entries": [[[0, 1], [1, 0]], [[2, 3], [3, 2]]]})");
        OVLaw law = ov_law_from_json(j);
        CHECK(law.dim() == 2);
        // E(A^2)_{00} = phi(a^2) + phi(b^2) = 2 for the symmetric entry layout
        Matrix m2 = law.oracle().moment(std::vector<int>{0, 0},
                                        law.oracle().identity_coeffs(2));
        CHECK(std::abs(m2(0, 0) - cx(2, 0)) < 1e-10);
    }
    SECTION("unknown kind") {
        CHECK_THROWS_AS(ov_law_from_json(json::parse(R"({"kind":"wat"})")), ConfigError);
    }
}
