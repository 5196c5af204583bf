#pragma once

// Finite-alphabet probability types and the divergences built on them.
// All quantities are in nats.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace exlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Tolerance on |sum - 1| accepted by the checked Distribution constructor.
inline constexpr double kSimplexTolerance = 1e-12;

struct Alphabet {
    std::size_t size = 2;

    explicit Alphabet(std::size_t n);
};

/// Probability vector over a finite alphabet. Immutable after construction.
class Distribution {
public:
    /// Throws std::invalid_argument unless every entry is >= 0, the vector has
    /// at least two entries and the entries sum to 1 within kSimplexTolerance.
    explicit Distribution(std::vector<double> probs);

    /// Accepts any non-negative vector with positive mass and rescales it to
    /// sum to one. Use for decimal-rounded inputs such as {0.33, 0.33, 0.33}.
    static Distribution normalized(std::vector<double> weights);
    static Distribution uniform(std::size_t n);

    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](std::size_t x) const noexcept { return probs_[x]; }
    std::span<const double> probs() const noexcept { return probs_; }
    Alphabet alphabet() const { return Alphabet(probs_.size()); }

    /// True when every entry is strictly positive.
    bool full_support() const noexcept;

    friend bool operator==(const Distribution&, const Distribution&) = default;

private:
    struct Unchecked {};
    Distribution(Unchecked, std::vector<double> probs) : probs_(std::move(probs)) {}

    std::vector<double> probs_;
};

/// Symbol counts of a sequence together with its length.
class EmpiricalType {
public:
    EmpiricalType(std::vector<std::int64_t> counts);

    std::size_t alphabet_size() const noexcept { return counts_.size(); }
    std::int64_t length() const noexcept { return length_; }
    std::span<const std::int64_t> counts() const noexcept { return counts_; }
    std::int64_t operator[](std::size_t x) const noexcept { return counts_[x]; }

    /// counts / length. Each entry is a single correctly rounded division.
    Distribution to_distribution() const;
    /// counts / length written into `out` (size must match).
    void fill_frequencies(std::span<double> out) const;

    /// Type of the concatenated sequence.
    EmpiricalType operator+(const EmpiricalType& other) const;

    friend bool operator==(const EmpiricalType&, const EmpiricalType&) = default;

private:
    std::vector<std::int64_t> counts_;
    std::int64_t length_ = 0;
};

/// D(P||Q). Returns kInf when P puts mass where Q has none.
double kl(const Distribution& p, const Distribution& q);
double kl(std::span<const double> p, std::span<const double> q);

/// alpha * D(P||M) + D(Q||M) with M = (alpha P + Q) / (1 + alpha).
double gjs(const Distribution& p, const Distribution& q, double alpha);
double gjs(std::span<const double> p, std::span<const double> q, double alpha);

/// Renyi divergence of the given order in (0, 1):
///   1/(order - 1) * log sum_x P(x)^order Q(x)^(1 - order).
/// With order = a / (1 + a) this is -(1 + a) log sum P^{a/(1+a)} Q^{1/(1+a)}.
double renyi(const Distribution& p, const Distribution& q, double order);

/// p log(p/q) + (1-p) log((1-p)/(1-q)) for p, q in (0, 1).
double binary_kl(double p, double q);

/// Counts each symbol of a non-empty sequence over {0, ..., alphabet_size-1}.
EmpiricalType empirical_type(std::span<const int> sequence, std::size_t alphabet_size);

/// Exponential tilting between two laws: Q_s(x) proportional to
/// P0(x)^(1-s) P1(x)^s, s in [0, 1]. Q_0 = P0 and Q_1 = P1 on their common support.
Distribution tilt(const Distribution& p0, const Distribution& p1, double s);

void require_same_alphabet(std::size_t a, std::size_t b);

}  // namespace exlab
