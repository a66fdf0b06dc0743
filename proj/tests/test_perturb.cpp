#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fedq/errors.hpp"
#include "fedq/perturb.hpp"

using namespace fedq;

TEST_CASE("noise_variance closed forms") {
    CHECK(noise_variance(NoiseSpec::uniform(5)) == doctest::Approx(25.0 / 3.0));
    CHECK(noise_variance(NoiseSpec::gaussian(2)) == 4.0);
    CHECK(noise_variance(NoiseSpec::uniform(0)) == 0.0);
}

TEST_CASE("sample_noise") {
    SUBCASE("degenerate specs collapse to zero") {
        SeededRng rng(1);
        CHECK(sample_noise(NoiseSpec::uniform(0), rng) == 0.0);
        CHECK(sample_noise(NoiseSpec::gaussian(0), rng) == 0.0);
    }
    SUBCASE("uniform draws stay in support") {
        SeededRng rng(2);
        NoiseSpec spec = NoiseSpec::uniform(5);
        for (int i = 0; i < 1000; ++i) {
            double y = sample_noise(spec, rng);
            CHECK(y >= -5.0);
            CHECK(y <= 5.0);
        }
    }
    SUBCASE("uniform sample mean obeys the central-limit bound") {
        // 4 * (alpha/sqrt(3)) / sqrt(n) ~= 0.037 for alpha=5, n=1e5;
        // +-0.05 leaves headroom beyond the 4-sigma bound.
        SeededRng rng(3);
        NoiseSpec spec = NoiseSpec::uniform(5);
        double sum = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) sum += sample_noise(spec, rng);
        double mean = sum / n;
        CHECK(mean >= -0.05);
        CHECK(mean <= 0.05);
    }
    SUBCASE("gaussian sample variance near sigma^2") {
        SeededRng rng(4);
        NoiseSpec spec = NoiseSpec::gaussian(3);
        std::vector<double> draws(100000);
        for (auto& d : draws) d = sample_noise(spec, rng);
        MomentEstimate est = estimate_moments(draws, NoiseSpec::uniform(0));
        CHECK(est.est_variance == doctest::Approx(9.0).epsilon(0.05));
    }
}

TEST_CASE("NoiseSpec serialization") {
    auto u = NoiseSpec::uniform(5).to_json();
    CHECK(u.dump() == R"({"family":"uniform","alpha":5.0})");
    NoiseSpec back = NoiseSpec::from_json(u);
    CHECK(back.family == NoiseFamily::Uniform);
    CHECK(back.alpha == 5.0);

    auto g = NoiseSpec::from_json(nlohmann::json{{"family", "gaussian"}, {"sigma", 2.5}});
    CHECK(g.sigma == 2.5);

    CHECK_THROWS_AS(NoiseSpec::from_json(nlohmann::json{{"family", "cauchy"}, {"alpha", 1}}),
                    ConfigError);
    CHECK_THROWS_AS(
        NoiseSpec::from_json(nlohmann::json{{"family", "uniform"}, {"sigma", 1}}),
        ConfigError);
}

TEST_CASE("policy validation") {
    Schema s = Schema::hospital();
    SUBCASE("default policy is valid") {
        PerturbationPolicy::hospital_default().validate(s);
    }
    SUBCASE("missing column") {
        PerturbationPolicy p;
        p.noise["height"] = NoiseSpec::uniform(1);
        CHECK_THROWS_AS(p.validate(s), PolicySchemaMismatch);
    }
    SUBCASE("non-numeric column") {
        PerturbationPolicy p;
        p.noise["diseasename"] = NoiseSpec::uniform(1);
        CHECK_THROWS_AS(p.validate(s), PolicySchemaMismatch);
    }
    SUBCASE("perturbed and suppressed at once") {
        PerturbationPolicy p;
        p.noise["age"] = NoiseSpec::uniform(1);
        p.suppressed.insert("age");
        CHECK_THROWS_AS(p.validate(s), PolicySchemaMismatch);
    }
    SUBCASE("negative alpha") {
        CHECK_THROWS_AS(NoiseSpec::uniform(-1), PolicySchemaMismatch);
    }
}

TEST_CASE("perturb_table") {
    Table t = fixture_hospital_a();

    SUBCASE("zero noise is the exact identity on kept columns") {
        PerturbationPolicy p = PerturbationPolicy::hospital_default(0.0);
        SeededRng rng(5);
        Table out = perturb_table(t, p, rng);
        REQUIRE(out.row_count() == 10);
        REQUIRE(out.schema.width() == 5);  // personid suppressed
        CHECK(!out.schema.index_of("personid"));
        CHECK(cell_number(out.rows[0][3]) == 30.0);  // p1's age, untouched
        for (size_t r = 0; r < 10; ++r) {
            CHECK(std::get<std::string>(out.rows[r][2]) ==
                  std::get<std::string>(t.rows[r][3]));  // diseasename byte-identical
            CHECK(cell_number(out.rows[r][3]) == cell_number(t.rows[r][4]));
        }
    }
    SUBCASE("uniform noise keeps every age within alpha of the original") {
        PerturbationPolicy p = PerturbationPolicy::hospital_default(5.0);
        SeededRng rng(6);
        Table out = perturb_table(t, p, rng);
        auto original = t.numeric_column("age");
        auto distorted = out.numeric_column("age");
        bool any_changed = false;
        for (size_t i = 0; i < 10; ++i) {
            CHECK(std::abs(distorted[i] - original[i]) <= 5.0);
            any_changed |= distorted[i] != original[i];
        }
        CHECK(any_changed);
    }
    SUBCASE("same seed gives byte-identical output") {
        PerturbationPolicy p = PerturbationPolicy::hospital_default(5.0);
        SeededRng a(7), b(7);
        CHECK(to_csv(perturb_table(t, p, a)) == to_csv(perturb_table(t, p, b)));
    }
    SUBCASE("parallel kernel matches the serial reference") {
        Table big = gen_synthetic(Schema::hospital(), 20000, 11);
        PerturbationPolicy p = PerturbationPolicy::hospital_default(5.0);
        p.noise["zipcode"] = NoiseSpec::gaussian(10.0);
        SeededRng a(8), b(8);
        CHECK(to_csv(perturb_table(big, p, a)) == to_csv(perturb_table_serial(big, p, b)));
    }
    SUBCASE("policy naming a bad column throws") {
        PerturbationPolicy p;
        p.noise["medicine"] = NoiseSpec::uniform(1);
        SeededRng rng(9);
        CHECK_THROWS_AS(perturb_table(t, p, rng), PolicySchemaMismatch);
    }
    SUBCASE("row count preserved, non-policy columns untouched") {
        Table big = gen_synthetic(Schema::hospital(), 1000, 12);
        PerturbationPolicy p = PerturbationPolicy::hospital_default(5.0);
        SeededRng rng(13);
        Table out = perturb_table(big, p, rng);
        CHECK(out.row_count() == 1000);
        auto zip_in = big.numeric_column("zipcode");
        auto zip_out = out.numeric_column("zipcode");
        CHECK(zip_in == zip_out);
    }
}

TEST_CASE("estimate_moments") {
    SUBCASE("zero-noise column equal to the fixture ages") {
        Table t = fixture_hospital_a();
        auto ages = t.numeric_column("age");
        // Independent oracle: direct sum of the ten digitized ages.
        double direct = std::accumulate(ages.begin(), ages.end(), 0.0) / 10.0;
        CHECK(direct == 47.6);
        MomentEstimate est = estimate_moments(ages, NoiseSpec::uniform(0));
        CHECK(est.est_mean == 47.6);
        CHECK(est.sample_count == 10);
    }
    SUBCASE("sigma=0 spec reduces to plain sample statistics") {
        std::vector<double> xs{1, 2, 3, 4};
        MomentEstimate est = estimate_moments(xs, NoiseSpec::gaussian(0));
        CHECK(est.est_mean == 2.5);
        CHECK(est.est_variance == doctest::Approx(5.0 / 3.0));
    }
    SUBCASE("constant 50 column under gaussian sigma=3 noise, n=1e4") {
        // 4*sigma/sqrt(n) = 0.12 bound on the mean.
        NoiseSpec spec = NoiseSpec::gaussian(3);
        SeededRng rng(14);
        std::vector<double> zs(10000);
        for (auto& z : zs) z = 50.0 + sample_noise(spec, rng);
        MomentEstimate est = estimate_moments(zs, spec);
        CHECK(est.est_mean >= 49.88);
        CHECK(est.est_mean <= 50.12);
    }
    SUBCASE("variance correction on synthetic data with known variance") {
        // x uniform over [30, 70]: v = 40^2/12; noise alpha=10: w = 100/3.
        const double v = 1600.0 / 12.0;
        const double w = 100.0 / 3.0;
        SeededRng rng(15);
        NoiseSpec spec = NoiseSpec::uniform(10);
        std::vector<double> zs(10000);
        for (auto& z : zs) z = rng.uniform(30, 70) + sample_noise(spec, rng);
        MomentEstimate est = estimate_moments(zs, spec);
        CHECK(std::abs(est.est_variance - v) <= 0.1 * (v + w));
    }
    SUBCASE("variance clamps at zero") {
        std::vector<double> xs{50, 50, 50, 50};
        MomentEstimate est = estimate_moments(xs, NoiseSpec::gaussian(3));
        CHECK(est.est_variance == 0.0);
    }
    SUBCASE("empty column throws") {
        CHECK_THROWS_AS(estimate_moments(std::vector<double>{}, NoiseSpec::uniform(1)),
                        EmptyColumn);
    }
}

TEST_CASE("statistical mean preservation across families") {
    // |mean(z) - mean(x)| <= 4*sqrt(noise_variance)/sqrt(n) on fixed seeds.
    const size_t n = 10000;
    for (auto spec : {NoiseSpec::uniform(5), NoiseSpec::uniform(10), NoiseSpec::gaussian(3)}) {
        SeededRng rng(16);
        double drift = 0.0;
        for (size_t i = 0; i < n; ++i) drift += sample_noise(spec, rng);
        drift = std::abs(drift / static_cast<double>(n));
        CHECK(drift <= 4.0 * std::sqrt(noise_variance(spec)) / std::sqrt(double(n)));
    }
}
