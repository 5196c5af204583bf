#include "exlab/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace exlab {

Alphabet::Alphabet(std::size_t n) : size(n) {
    if (n < 2) {
        throw std::invalid_argument("alphabet must contain at least two symbols");
    }
}

Distribution::Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.size() < 2) {
        throw std::invalid_argument("distribution needs at least two entries");
    }
    double sum = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw std::invalid_argument("distribution entries must be finite and non-negative");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance) {
        throw std::invalid_argument("distribution entries sum to " + std::to_string(sum) +
                                    ", expected 1");
    }
}

Distribution Distribution::normalized(std::vector<double> weights) {
    if (weights.size() < 2) {
        throw std::invalid_argument("distribution needs at least two entries");
    }
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw std::invalid_argument("weights must be finite and non-negative");
        }
        sum += w;
    }
    if (!(sum > 0.0)) {
        throw std::invalid_argument("weights must have positive mass");
    }
    for (double& w : weights) {
        w /= sum;
    }
    return Distribution(Unchecked{}, std::move(weights));
}

Distribution Distribution::uniform(std::size_t n) {
    Alphabet check(n);
    return Distribution(Unchecked{}, std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

bool Distribution::full_support() const noexcept {
    for (double p : probs_) {
        if (p <= 0.0) {
            return false;
        }
    }
    return true;
}

EmpiricalType::EmpiricalType(std::vector<std::int64_t> counts) : counts_(std::move(counts)) {
    if (counts_.size() < 2) {
        throw std::invalid_argument("type needs an alphabet of at least two symbols");
    }
    for (std::int64_t c : counts_) {
        if (c < 0) {
            throw std::invalid_argument("type counts must be non-negative");
        }
        length_ += c;
    }
    if (length_ <= 0) {
        throw std::invalid_argument("type must describe a non-empty sequence");
    }
}

Distribution EmpiricalType::to_distribution() const {
    std::vector<double> freq(counts_.size());
    fill_frequencies(freq);
    return Distribution(std::move(freq));
}

void EmpiricalType::fill_frequencies(std::span<double> out) const {
    require_same_alphabet(out.size(), counts_.size());
    const double n = static_cast<double>(length_);
    for (std::size_t x = 0; x < counts_.size(); ++x) {
        out[x] = static_cast<double>(counts_[x]) / n;
    }
}

EmpiricalType EmpiricalType::operator+(const EmpiricalType& other) const {
    require_same_alphabet(counts_.size(), other.counts_.size());
    std::vector<std::int64_t> sum(counts_);
    for (std::size_t x = 0; x < sum.size(); ++x) {
        sum[x] += other.counts_[x];
    }
    return EmpiricalType(std::move(sum));
}

void require_same_alphabet(std::size_t a, std::size_t b) {
    if (a != b) {
        throw std::invalid_argument("alphabet size mismatch: " + std::to_string(a) + " vs " +
                                    std::to_string(b));
    }
}

double kl(std::span<const double> p, std::span<const double> q) {
    require_same_alphabet(p.size(), q.size());
    double sum = 0.0;
    for (std::size_t x = 0; x < p.size(); ++x) {
        if (p[x] <= 0.0) {
            continue;
        }
        if (q[x] <= 0.0) {
            return kInf;
        }
        sum += p[x] * std::log(p[x] / q[x]);
    }
    // Rounding can leave a tiny negative residue for P == Q up to ulps.
    return sum > 0.0 ? sum : 0.0;
}

double kl(const Distribution& p, const Distribution& q) { return kl(p.probs(), q.probs()); }

double gjs(std::span<const double> p, std::span<const double> q, double alpha) {
    require_same_alphabet(p.size(), q.size());
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw std::invalid_argument("gjs ratio alpha must be positive and finite");
    }
    // log(p/m) and log(q/m) are taken through log1p of the relative offset of
    // the mixture, which stays accurate when alpha is large and m ~ p.
    const double inv = 1.0 / (1.0 + alpha);
    double sum = 0.0;
    for (std::size_t x = 0; x < p.size(); ++x) {
        const double px = p[x];
        const double qx = q[x];
        const double diff = qx - px;
        if (px > 0.0) {
            sum -= alpha * px * std::log1p(diff * inv / px);
        }
        if (qx > 0.0) {
            sum -= qx * std::log1p(-alpha * diff * inv / qx);
        }
    }
    return sum > 0.0 ? sum : 0.0;
}

double gjs(const Distribution& p, const Distribution& q, double alpha) {
    return gjs(p.probs(), q.probs(), alpha);
}

double renyi(const Distribution& p, const Distribution& q, double order) {
    require_same_alphabet(p.size(), q.size());
    if (!(order > 0.0 && order < 1.0)) {
        throw std::invalid_argument("renyi order must lie in (0, 1)");
    }
    double sum = 0.0;
    for (std::size_t x = 0; x < p.size(); ++x) {
        if (p[x] > 0.0 && q[x] > 0.0) {
            sum += std::pow(p[x], order) * std::pow(q[x], 1.0 - order);
        }
    }
    if (sum <= 0.0) {
        return kInf;
    }
    const double value = std::log(sum) / (order - 1.0);
    return value > 0.0 ? value : 0.0;
}

double binary_kl(double p, double q) {
    if (!(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0)) {
        throw std::invalid_argument("binary_kl arguments must lie in (0, 1)");
    }
    return p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
}

EmpiricalType empirical_type(std::span<const int> sequence, std::size_t alphabet_size) {
    Alphabet check(alphabet_size);
    if (sequence.empty()) {
        throw std::invalid_argument("empirical type of an empty sequence");
    }
    std::vector<std::int64_t> counts(alphabet_size, 0);
    for (int symbol : sequence) {
        if (symbol < 0 || static_cast<std::size_t>(symbol) >= alphabet_size) {
            throw std::invalid_argument("symbol " + std::to_string(symbol) +
                                        " outside the alphabet");
        }
        ++counts[static_cast<std::size_t>(symbol)];
    }
    return EmpiricalType(std::move(counts));
}

Distribution tilt(const Distribution& p0, const Distribution& p1, double s) {
    require_same_alphabet(p0.size(), p1.size());
    if (!(s >= 0.0 && s <= 1.0)) {
        throw std::invalid_argument("tilt parameter must lie in [0, 1]");
    }
    if (s == 0.0) {
        return p0;
    }
    if (s == 1.0) {
        return p1;
    }
    // Work in logs relative to the largest term to avoid underflow.
    std::vector<double> logw(p0.size(), -kInf);
    double peak = -kInf;
    for (std::size_t x = 0; x < p0.size(); ++x) {
        if (p0[x] > 0.0 && p1[x] > 0.0) {
            logw[x] = (1.0 - s) * std::log(p0[x]) + s * std::log(p1[x]);
            peak = std::max(peak, logw[x]);
        }
    }
    if (peak == -kInf) {
        throw std::invalid_argument("tilting between laws with disjoint supports");
    }
    std::vector<double> w(p0.size(), 0.0);
    for (std::size_t x = 0; x < p0.size(); ++x) {
        if (logw[x] > -kInf) {
            w[x] = std::exp(logw[x] - peak);
        }
    }
    return Distribution::normalized(std::move(w));
}

}  // namespace exlab
