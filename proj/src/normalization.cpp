#include "chda/normalization.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "chda/errors.hpp"

namespace chda::score {

NormStats NormStats::from_ensemble(const Ensemble& data) {
    auto [mean, dev] = ensemble_mean_and_deviations(data);
    NormStats s;
    s.mean = Eigen::Map<const Eigen::VectorXd>(mean.values.data(),
                                               static_cast<Eigen::Index>(mean.values.size()));
    s.stddev.resize(s.mean.size());
    for (Eigen::Index c = 0; c < s.stddev.size(); ++c)
        s.stddev[c] = std::sqrt(dev.col(c).squaredNorm() / static_cast<double>(dev.rows() - 1));
    return s;
}

Eigen::VectorXd NormStats::normalize(const Eigen::VectorXd& x) const {
    if (x.size() != mean.size()) throw std::invalid_argument("normalize: shape mismatch");
    Eigen::VectorXd out(x.size());
    for (Eigen::Index c = 0; c < x.size(); ++c) {
        const double centered = x[c] - mean[c];
        out[c] = stddev[c] > 0.0 ? centered / stddev[c] : centered;
    }
    return out;
}

Eigen::VectorXd NormStats::denormalize(const Eigen::VectorXd& x) const {
    if (x.size() != mean.size()) throw std::invalid_argument("denormalize: shape mismatch");
    Eigen::VectorXd out(x.size());
    for (Eigen::Index c = 0; c < x.size(); ++c)
        out[c] = (stddev[c] > 0.0 ? x[c] * stddev[c] : x[c]) + mean[c];
    return out;
}

void NormStats::write(std::ostream& out) const {
    const auto n = static_cast<std::uint64_t>(mean.size());
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((n >> (8 * i)) & 0xff);
    out.write(b, 8);
    auto put = [&](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        char bb[8];
        for (int i = 0; i < 8; ++i) bb[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
        out.write(bb, 8);
    };
    for (Eigen::Index c = 0; c < mean.size(); ++c) put(mean[c]);
    for (Eigen::Index c = 0; c < stddev.size(); ++c) put(stddev[c]);
}

NormStats NormStats::read(std::istream& in) {
    auto get_u64 = [&]() {
        char b[8];
        in.read(b, 8);
        if (in.gcount() != 8) throw TruncatedError("truncated normalization stats");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
        return v;
    };
    auto get = [&]() {
        const std::uint64_t bits = get_u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    };
    NormStats s;
    const auto n = static_cast<Eigen::Index>(get_u64());
    s.mean.resize(n);
    s.stddev.resize(n);
    for (Eigen::Index c = 0; c < n; ++c) s.mean[c] = get();
    for (Eigen::Index c = 0; c < n; ++c) s.stddev[c] = get();
    return s;
}

SampleDiagnostics diagnose_sample(const Eigen::VectorXd& log10_k, double facies_midpoint) {
    SampleDiagnostics d;
    if (log10_k.size() == 0) return d;
    d.min_value = log10_k.minCoeff();
    d.max_value = log10_k.maxCoeff();
    double channel = 0, in_range = 0;
    for (Eigen::Index c = 0; c < log10_k.size(); ++c) {
        if (log10_k[c] > facies_midpoint) channel += 1.0;
        if (log10_k[c] >= 1.0 && log10_k[c] <= 4.0) in_range += 1.0;
    }
    d.channel_fraction = channel / static_cast<double>(log10_k.size());
    d.in_range_fraction = in_range / static_cast<double>(log10_k.size());
    return d;
}

}  // namespace chda::score
