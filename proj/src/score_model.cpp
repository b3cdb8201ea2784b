#include "chda/score_model.hpp"

#include <fstream>

namespace chda::score {

ScoreModel ScoreModel::gaussian(Eigen::VectorXd mean, double variance) {
    if (variance <= 0.0) throw std::invalid_argument("ScoreModel::gaussian: variance must be > 0");
    ScoreModel m;
    m.backend_ = GaussBackend{std::move(mean), variance};
    return m;
}

ScoreModel ScoreModel::pointmass(Eigen::VectorXd x0) {
    ScoreModel m;
    m.backend_ = PointBackend{std::move(x0)};
    return m;
}

ScoreModel ScoreModel::network(ScoreNetwork net, std::optional<NormStats> stats) {
    ScoreModel m;
    m.backend_ = NetBackend{std::move(net)};
    m.stats_ = std::move(stats);
    return m;
}

Eigen::VectorXd ScoreModel::score(const Eigen::VectorXd& x, double t,
                                  const VESchedule& sched) const {
    if (t <= 0.0 || t > sched.terminal_time)
        throw std::invalid_argument("score: t outside (0, T]");
    const double st = sigma_t(t, sched);
    if (const auto* g = std::get_if<GaussBackend>(&backend_))
        return -(x - g->mean) / (g->variance + st * st);
    if (const auto* p = std::get_if<PointBackend>(&backend_)) return -(x - p->x0) / (st * st);
    const auto& net = std::get<NetBackend>(backend_).net;
    return net.forward(x, t) / st;
}

Eigen::Index ScoreModel::size() const {
    if (const auto* g = std::get_if<GaussBackend>(&backend_)) return g->mean.size();
    if (const auto* p = std::get_if<PointBackend>(&backend_)) return p->x0.size();
    return static_cast<Eigen::Index>(std::get<NetBackend>(backend_).net.spec().field_size());
}

void ScoreModel::save(const std::filesystem::path& path) const {
    const auto* nb = std::get_if<NetBackend>(&backend_);
    if (!nb) throw std::logic_error("ScoreModel::save: only network backends persist");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    nb->net.write(out);
    const char has_stats = stats_ ? 1 : 0;
    out.write(&has_stats, 1);
    if (stats_) stats_->write(out);
}

ScoreModel ScoreModel::load_network(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
    ScoreNetwork net = ScoreNetwork::read(in);
    char has_stats = 0;
    in.read(&has_stats, 1);
    std::optional<NormStats> stats;
    if (in.gcount() == 1 && has_stats) stats = NormStats::read(in);
    return network(std::move(net), std::move(stats));
}

}  // namespace chda::score
