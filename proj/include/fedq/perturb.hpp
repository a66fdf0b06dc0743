#ifndef FEDQ_PERTURB_HPP
#define FEDQ_PERTURB_HPP

#include <map>
#include <set>
#include <span>
#include <string>

#include "fedq/datastore.hpp"
#include "fedq/rng.hpp"

#include <nlohmann/json.hpp>

namespace fedq {

enum class NoiseFamily { Uniform, Gaussian };

// Additive mean-zero noise: Uniform over [-alpha, alpha] or Gaussian with
// standard deviation sigma.
struct NoiseSpec {
    NoiseFamily family = NoiseFamily::Uniform;
    double alpha = 0.0;
    double sigma = 0.0;

    static NoiseSpec uniform(double alpha);
    static NoiseSpec gaussian(double sigma);

    void validate() const;
    nlohmann::ordered_json to_json() const;
    static NoiseSpec from_json(const nlohmann::json& j);
};

struct PerturbationPolicy {
    std::map<std::string, NoiseSpec> noise;   // column -> noise
    std::set<std::string> suppressed;         // direct identifiers, dropped
    bool round_to_int = false;                // display-only rounding
    bool clamp_nonnegative = false;           // off by default: clamping biases the mean

    void validate(const Schema& schema) const;
    // age gets Uniform(alpha) noise, personid is suppressed.
    static PerturbationPolicy hospital_default(double alpha = 5.0);

    nlohmann::ordered_json to_json() const;
    static PerturbationPolicy from_json(const nlohmann::json& j);
};

struct MomentEstimate {
    double est_mean = 0.0;
    double est_variance = 0.0;   // clamped at 0 after noise subtraction
    size_t sample_count = 0;
};

double noise_variance(const NoiseSpec& spec);
double sample_noise(const NoiseSpec& spec, SeededRng& rng);

// Parallel (OpenMP) perturbation kernel and the serial reference it is
// checked against. Both produce byte-identical output for the same rng
// state: each cell's noise comes from a substream keyed on (row, column).
Table perturb_table(const Table& table, const PerturbationPolicy& policy, SeededRng& rng);
Table perturb_table_serial(const Table& table, const PerturbationPolicy& policy, SeededRng& rng);

MomentEstimate estimate_moments(std::span<const double> perturbed, const NoiseSpec& spec);

}  // namespace fedq

#endif
