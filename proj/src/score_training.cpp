#include "chda/score_training.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "chda/errors.hpp"

namespace chda::score {
namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}
std::uint64_t get_u64(std::istream& in) {
    char b[8];
    in.read(b, 8);
    if (in.gcount() != 8) throw TruncatedError("truncated checkpoint");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
}
void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}
double get_f64(std::istream& in) {
    const std::uint64_t bits = get_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void Checkpoint::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out.write("CHCK", 4);
    net.write(out);
    put_u64(out, momentum.size());
    for (double v : momentum) put_f64(out, v);
    put_u64(out, static_cast<std::uint64_t>(next_epoch));
    put_f64(out, best_loss);
    put_u64(out, rng_seed);
    put_u64(out, rng_stream);
    put_u64(out, rng_counter);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, "CHCK", 4) != 0)
        throw FormatError("format error: bad checkpoint magic");
    Checkpoint ck;
    ck.net = ScoreNetwork::read(in);
    ck.momentum.resize(get_u64(in));
    for (auto& v : ck.momentum) v = get_f64(in);
    ck.next_epoch = static_cast<int>(get_u64(in));
    ck.best_loss = get_f64(in);
    ck.rng_seed = get_u64(in);
    ck.rng_stream = get_u64(in);
    ck.rng_counter = get_u64(in);
    return ck;
}

Eigen::MatrixXd normalized_training_matrix(const Ensemble& data, const NormStats& stats) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(data.size()),
                      static_cast<Eigen::Index>(data.grid().cell_count()));
    for (std::size_t j = 0; j < data.size(); ++j) {
        const auto& vals = data.members[j].values;
        m.row(static_cast<Eigen::Index>(j)) =
            stats
                .normalize(Eigen::Map<const Eigen::VectorXd>(
                    vals.data(), static_cast<Eigen::Index>(vals.size())))
                .transpose();
    }
    return m;
}

TrainResult dsm_train(const Eigen::MatrixXd& data, const NetworkSpec& spec,
                      const VESchedule& sched, const OptConfig& opt, RngStream& rng,
                      const Checkpoint* resume, const std::filesystem::path& checkpoint_path) {
    spec.validate();
    sched.validate();
    if (data.rows() < 1) throw std::invalid_argument("dsm_train: empty dataset");
    if (static_cast<std::size_t>(data.cols()) != spec.field_size())
        throw std::invalid_argument("dsm_train: data shape does not match the network");
    if (opt.batch_size < 1 || opt.epochs < 0) throw std::invalid_argument("dsm_train: bad config");

    TrainResult result;
    std::vector<double> velocity;
    int start_epoch = 0;
    double best = std::numeric_limits<double>::infinity();
    RngStream train_rng(0, 0);

    if (resume) {
        result.net = resume->net;
        velocity = resume->momentum;
        start_epoch = resume->next_epoch;
        best = resume->best_loss;
        train_rng = RngStream::restore(resume->rng_seed, resume->rng_stream, resume->rng_counter);
    } else {
        RngStream init_rng = rng.fork("init");
        result.net = ScoreNetwork(spec, init_rng);
        velocity.assign(result.net.params().size(), 0.0);
        train_rng = rng.fork("train");
    }

    const auto n = data.rows();
    const std::size_t n_params = result.net.params().size();
    std::vector<double> grad(n_params);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    int since_best = 0;
    for (int epoch = start_epoch; epoch < opt.epochs; ++epoch) {
        // Cosine decay over the configured epoch budget.
        const double frac = opt.epochs > 1 ? static_cast<double>(epoch) / (opt.epochs - 1) : 0.0;
        const double lr =
            opt.lr_min + 0.5 * (opt.lr_max - opt.lr_min) * (1.0 + std::cos(std::numbers::pi * frac));

        for (int k = static_cast<int>(n) - 1; k > 0; --k)
            std::swap(order[k], order[train_rng.below(static_cast<std::uint64_t>(k + 1))]);

        double epoch_loss = 0.0;
        for (Eigen::Index at = 0; at < n; at += opt.batch_size) {
            const auto batch = std::min<Eigen::Index>(opt.batch_size, n - at);
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (Eigen::Index s = 0; s < batch; ++s) {
                const Eigen::VectorXd x0 = data.row(order[at + s]).transpose();
                const double t =
                    opt.t_cutoff + (sched.terminal_time - opt.t_cutoff) * train_rng.uniform();
                Eigen::VectorXd eps(x0.size());
                for (Eigen::Index c = 0; c < eps.size(); ++c) eps[c] = train_rng.normal();
                batch_loss += result.net.loss_and_grad(x0, t, eps, sched, grad);
            }
            batch_loss /= static_cast<double>(batch);
            if (!std::isfinite(batch_loss))
                throw std::runtime_error(
                    "dsm_train: non-finite loss at epoch " + std::to_string(epoch) + ", sample " +
                    std::to_string(at) + " (lr " + std::to_string(lr) + ")");
            epoch_loss += batch_loss * static_cast<double>(batch);

            auto& params = result.net.params();
            const double scale = 1.0 / static_cast<double>(batch);
            for (std::size_t p = 0; p < n_params; ++p) {
                velocity[p] = opt.momentum * velocity[p] - lr * grad[p] * scale;
                params[p] += velocity[p];
            }
        }
        epoch_loss /= static_cast<double>(n);
        best = std::min(best, epoch_loss);
        result.trajectory.push_back({epoch, epoch_loss, best});
        ++result.epochs_run;

        if (epoch_loss <= best) since_best = 0;
        else if (++since_best >= opt.patience && opt.patience > 0)
            break;

        if (!checkpoint_path.empty()) {
            Checkpoint ck;
            ck.net = result.net;
            ck.momentum = velocity;
            ck.next_epoch = epoch + 1;
            ck.best_loss = best;
            ck.rng_seed = train_rng.seed();
            ck.rng_stream = train_rng.stream_id();
            ck.rng_counter = train_rng.counter();
            ck.save(checkpoint_path);
        }
    }
    return result;
}

void write_loss_csv(const std::vector<EpochLoss>& trajectory, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    std::ostringstream ss;
    ss.precision(17);
    ss << "epoch,loss,best_loss\n";
    for (const auto& e : trajectory) ss << e.epoch << ',' << e.loss << ',' << e.best_loss << '\n';
    out << ss.str();
}

}  // namespace chda::score
