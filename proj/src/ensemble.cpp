#include "chda/ensemble.hpp"

#include <stdexcept>

namespace chda {

void Ensemble::validate() const {
    if (members.empty()) throw std::invalid_argument("Ensemble: no members");
    const GridSpec& g = members.front().grid;
    for (const auto& m : members) {
        if (!(m.grid == g)) throw std::invalid_argument("Ensemble: members on different grids");
        if (m.values.size() != g.cell_count())
            throw std::invalid_argument("Ensemble: member value count mismatch");
    }
}

Eigen::MatrixXd Ensemble::as_matrix() const {
    validate();
    const auto nz = static_cast<Eigen::Index>(grid().cell_count());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(size()), nz);
    for (Eigen::Index j = 0; j < m.rows(); ++j)
        for (Eigen::Index c = 0; c < nz; ++c) m(j, c) = members[j].values[c];
    return m;
}

MeanAndDeviations ensemble_mean_and_deviations(const Ensemble& e) {
    if (e.size() < 2) throw std::invalid_argument("insufficient ensemble");
    e.validate();

    const std::size_t nz = e.grid().cell_count();
    const std::size_t ne = e.size();

    LogPermField mean(e.grid());
    std::vector<long double> acc(nz, 0.0L);
    for (const auto& m : e.members)
        for (std::size_t c = 0; c < nz; ++c) acc[c] += m.values[c];
    for (std::size_t c = 0; c < nz; ++c)
        mean.values[c] = static_cast<double>(acc[c] / static_cast<long double>(ne));

    Eigen::MatrixXd dev(static_cast<Eigen::Index>(ne), static_cast<Eigen::Index>(nz));
    for (std::size_t j = 0; j < ne; ++j)
        for (std::size_t c = 0; c < nz; ++c)
            dev(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) =
                e.members[j].values[c] - mean.values[c];

    return {std::move(mean), std::move(dev)};
}

}  // namespace chda
