#include "chda/score_network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "chda/errors.hpp"

namespace chda::score {
namespace {

double silu(double x) { return x / (1.0 + std::exp(-x)); }
double silu_prime(double x) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    return s * (1.0 + x * (1.0 - s));
}

/// out[co] = b[co] + sum_ci W[co][ci] * in[ci], same padding.
void conv_fwd(const double* in, int cin, const double* w, const double* b, double* out, int cout,
              int h, int wd, int k) {
    const int p = k / 2;
    const int hw = h * wd;
    for (int co = 0; co < cout; ++co) {
        double* o = out + static_cast<std::size_t>(co) * hw;
        std::fill(o, o + hw, b[co]);
        for (int ci = 0; ci < cin; ++ci) {
            const double* src = in + static_cast<std::size_t>(ci) * hw;
            const double* wk = w + (static_cast<std::size_t>(co) * cin + ci) * k * k;
            for (int dy = 0; dy < k; ++dy) {
                const int sy = dy - p;
                const int y0 = std::max(0, -sy), y1 = std::min(h, h - sy);
                for (int dx = 0; dx < k; ++dx) {
                    const int sx = dx - p;
                    const double wv = wk[dy * k + dx];
                    const int x0 = std::max(0, -sx), x1 = std::min(wd, wd - sx);
                    for (int y = y0; y < y1; ++y) {
                        const double* srow = src + (y + sy) * wd + sx;
                        double* orow = o + y * wd;
                        for (int x = x0; x < x1; ++x) orow[x] += wv * srow[x];
                    }
                }
            }
        }
    }
}

/// din[ci] += sum_co W[co][ci] *adjoint* dout[co] (transposed convolution).
void conv_bwd_input(const double* dout, int cout, const double* w, double* din, int cin, int h,
                    int wd, int k) {
    const int p = k / 2;
    const int hw = h * wd;
    for (int co = 0; co < cout; ++co) {
        const double* dsrc = dout + static_cast<std::size_t>(co) * hw;
        for (int ci = 0; ci < cin; ++ci) {
            double* d = din + static_cast<std::size_t>(ci) * hw;
            const double* wk = w + (static_cast<std::size_t>(co) * cin + ci) * k * k;
            for (int dy = 0; dy < k; ++dy) {
                const int sy = dy - p;
                const int y0 = std::max(0, -sy), y1 = std::min(h, h - sy);
                for (int dx = 0; dx < k; ++dx) {
                    const int sx = dx - p;
                    const double wv = wk[dy * k + dx];
                    const int x0 = std::max(0, -sx), x1 = std::min(wd, wd - sx);
                    for (int y = y0; y < y1; ++y) {
                        const double* drow = dsrc + y * wd;
                        double* irow = d + (y + sy) * wd + sx;
                        for (int x = x0; x < x1; ++x) irow[x] += wv * drow[x];
                    }
                }
            }
        }
    }
}

/// dW[co][ci][dy][dx] += sum_yx dout[co][y][x] * in[ci][y+sy][x+sx]; db[co] += sum dout[co].
void conv_bwd_params(const double* dout, int cout, const double* in, int cin, double* dw,
                     double* db, int h, int wd, int k) {
    const int p = k / 2;
    const int hw = h * wd;
    for (int co = 0; co < cout; ++co) {
        const double* dsrc = dout + static_cast<std::size_t>(co) * hw;
        double acc = 0.0;
        for (int c = 0; c < hw; ++c) acc += dsrc[c];
        db[co] += acc;
        for (int ci = 0; ci < cin; ++ci) {
            const double* src = in + static_cast<std::size_t>(ci) * hw;
            double* wk = dw + (static_cast<std::size_t>(co) * cin + ci) * k * k;
            for (int dy = 0; dy < k; ++dy) {
                const int sy = dy - p;
                const int y0 = std::max(0, -sy), y1 = std::min(h, h - sy);
                for (int dx = 0; dx < k; ++dx) {
                    const int sx = dx - p;
                    const int x0 = std::max(0, -sx), x1 = std::min(wd, wd - sx);
                    double g = 0.0;
                    for (int y = y0; y < y1; ++y) {
                        const double* drow = dsrc + y * wd;
                        const double* srow = src + (y + sy) * wd + sx;
                        for (int x = x0; x < x1; ++x) g += drow[x] * srow[x];
                    }
                    wk[dy * k + dx] += g;
                }
            }
        }
    }
}

}  // namespace

void NetworkSpec::validate() const {
    if (height < 2 || width < 2) throw std::invalid_argument("NetworkSpec: grid too small");
    if (channels < 1 || n_blocks < 1) throw std::invalid_argument("NetworkSpec: need channels/blocks");
    if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("NetworkSpec: kernel must be odd");
    if (time_embed_dim < 2 || time_embed_dim % 2 != 0)
        throw std::invalid_argument("NetworkSpec: time_embed_dim must be even and >= 2");
    if (fourier_scale <= 0.0) throw std::invalid_argument("NetworkSpec: fourier_scale must be > 0");
}

namespace {

/// Parameter offsets in declaration order.
struct Layout {
    std::size_t time_w, time_b;
    std::size_t conv_in_w, conv_in_b;
    struct Block {
        std::size_t tproj_w, tproj_b, conv1_w, conv1_b, conv2_w, conv2_b;
    };
    std::vector<Block> blocks;
    std::size_t conv_out_w, conv_out_b;
    std::size_t total;

    explicit Layout(const NetworkSpec& s) {
        const std::size_t e = s.time_embed_dim;
        const std::size_t c = s.channels;
        const std::size_t kk = static_cast<std::size_t>(s.kernel) * s.kernel;
        std::size_t at = 0;
        auto take = [&](std::size_t n) {
            const std::size_t r = at;
            at += n;
            return r;
        };
        time_w = take(e * e);
        time_b = take(e);
        conv_in_w = take(c * 1 * kk);
        conv_in_b = take(c);
        blocks.resize(s.n_blocks);
        for (auto& b : blocks) {
            b.tproj_w = take(c * e);
            b.tproj_b = take(c);
            b.conv1_w = take(c * c * kk);
            b.conv1_b = take(c);
            b.conv2_w = take(c * c * kk);
            b.conv2_b = take(c);
        }
        conv_out_w = take(1 * c * kk);
        conv_out_b = take(1);
        total = at;
    }
};

}  // namespace

std::size_t NetworkSpec::n_params() const { return Layout(*this).total; }

ScoreNetwork::ScoreNetwork(const NetworkSpec& spec, RngStream& rng) : spec_(spec) {
    spec_.validate();
    const Layout lay(spec_);
    params_.assign(lay.total, 0.0);
    fourier_freqs_.resize(static_cast<std::size_t>(spec_.time_embed_dim) / 2);
    RngStream finit = rng.fork("fourier");
    for (auto& f : fourier_freqs_) f = spec_.fourier_scale * finit.normal();

    RngStream winit = rng.fork("weights");
    auto he = [&](std::size_t at, std::size_t n, std::size_t fan_in, double gain) {
        const double std = gain * std::sqrt(2.0 / static_cast<double>(fan_in));
        for (std::size_t c = 0; c < n; ++c) params_[at + c] = std * winit.normal();
    };
    const std::size_t e = spec_.time_embed_dim;
    const std::size_t c = spec_.channels;
    const std::size_t kk = static_cast<std::size_t>(spec_.kernel) * spec_.kernel;
    he(lay.time_w, e * e, e, 1.0);
    he(lay.conv_in_w, c * kk, kk, 1.0);
    for (const auto& b : lay.blocks) {
        he(b.tproj_w, c * e, e, 1.0);
        he(b.conv1_w, c * c * kk, c * kk, 1.0);
        he(b.conv2_w, c * c * kk, c * kk, 1.0);
    }
    he(lay.conv_out_w, c * kk, c * kk, 0.01);
}

struct ScoreNetwork::Workspace {
    std::vector<double> emb0, time_pre, emb;
    std::vector<double> h;                       // (n_blocks+1) stacked C*HW states
    std::vector<double> pre1, act1, pre2;        // per block, C*HW each
    std::vector<double> out;                     // HW
};

void ScoreNetwork::run_forward(const Eigen::VectorXd& x, double t, Workspace& ws) const {
    const Layout lay(spec_);
    const int h = spec_.height, wd = spec_.width, k = spec_.kernel;
    const int c = spec_.channels, e = spec_.time_embed_dim, nb = spec_.n_blocks;
    const std::size_t hw = spec_.field_size();
    const std::size_t chw = static_cast<std::size_t>(c) * hw;
    if (static_cast<std::size_t>(x.size()) != hw)
        throw std::invalid_argument("ScoreNetwork: input shape mismatch");

    // Gaussian Fourier features of t.
    ws.emb0.resize(e);
    for (int f = 0; f < e / 2; ++f) {
        const double a = 2.0 * std::numbers::pi * fourier_freqs_[f] * t;
        ws.emb0[f] = std::sin(a);
        ws.emb0[e / 2 + f] = std::cos(a);
    }
    ws.time_pre.assign(e, 0.0);
    ws.emb.resize(e);
    const double* tw = params_.data() + lay.time_w;
    for (int r = 0; r < e; ++r) {
        double acc = params_[lay.time_b + r];
        for (int q = 0; q < e; ++q) acc += tw[static_cast<std::size_t>(r) * e + q] * ws.emb0[q];
        ws.time_pre[r] = acc;
        ws.emb[r] = silu(acc);
    }

    ws.h.assign(static_cast<std::size_t>(nb + 1) * chw, 0.0);
    ws.pre1.assign(static_cast<std::size_t>(nb) * chw, 0.0);
    ws.act1.assign(static_cast<std::size_t>(nb) * chw, 0.0);
    ws.pre2.assign(static_cast<std::size_t>(nb) * chw, 0.0);
    ws.out.assign(hw, 0.0);

    conv_fwd(x.data(), 1, params_.data() + lay.conv_in_w, params_.data() + lay.conv_in_b,
             ws.h.data(), c, h, wd, k);

    for (int b = 0; b < nb; ++b) {
        const auto& bl = lay.blocks[static_cast<std::size_t>(b)];
        const double* hin = ws.h.data() + static_cast<std::size_t>(b) * chw;
        double* hout = ws.h.data() + static_cast<std::size_t>(b + 1) * chw;
        double* pre1 = ws.pre1.data() + static_cast<std::size_t>(b) * chw;
        double* act1 = ws.act1.data() + static_cast<std::size_t>(b) * chw;
        double* pre2 = ws.pre2.data() + static_cast<std::size_t>(b) * chw;

        conv_fwd(hin, c, params_.data() + bl.conv1_w, params_.data() + bl.conv1_b, pre1, c, h, wd,
                 k);
        // Additive per-channel time embedding.
        const double* pw = params_.data() + bl.tproj_w;
        for (int ch = 0; ch < c; ++ch) {
            double tb = params_[bl.tproj_b + ch];
            for (int q = 0; q < e; ++q) tb += pw[static_cast<std::size_t>(ch) * e + q] * ws.emb[q];
            double* row = pre1 + static_cast<std::size_t>(ch) * hw;
            for (std::size_t px = 0; px < hw; ++px) row[px] += tb;
        }
        for (std::size_t cpx = 0; cpx < chw; ++cpx) act1[cpx] = silu(pre1[cpx]);
        conv_fwd(act1, c, params_.data() + bl.conv2_w, params_.data() + bl.conv2_b, pre2, c, h, wd,
                 k);
        for (std::size_t cpx = 0; cpx < chw; ++cpx) hout[cpx] = hin[cpx] + silu(pre2[cpx]);
    }

    conv_fwd(ws.h.data() + static_cast<std::size_t>(nb) * chw, c, params_.data() + lay.conv_out_w,
             params_.data() + lay.conv_out_b, ws.out.data(), 1, h, wd, k);
}

Eigen::VectorXd ScoreNetwork::forward(const Eigen::VectorXd& x, double t) const {
    Workspace ws;
    run_forward(x, t, ws);
    return Eigen::Map<const Eigen::VectorXd>(ws.out.data(), static_cast<Eigen::Index>(ws.out.size()));
}

double ScoreNetwork::loss_and_grad(const Eigen::VectorXd& x0, double t, const Eigen::VectorXd& eps,
                                   const VESchedule& sched, std::vector<double>& grad) const {
    const Layout lay(spec_);
    if (grad.size() != lay.total) throw std::invalid_argument("loss_and_grad: gradient size");
    const double st = sigma_t(t, sched);
    const Eigen::VectorXd xt = x0 + st * eps;

    Workspace ws;
    run_forward(xt, t, ws);

    const int h = spec_.height, wd = spec_.width, k = spec_.kernel;
    const int c = spec_.channels, e = spec_.time_embed_dim, nb = spec_.n_blocks;
    const std::size_t hw = spec_.field_size();
    const std::size_t chw = static_cast<std::size_t>(c) * hw;

    // L = ||eps + u||^2 (u = raw output; sigma_t * score = u).
    double loss = 0.0;
    std::vector<double> dout(hw);
    for (std::size_t px = 0; px < hw; ++px) {
        const double r = eps[static_cast<Eigen::Index>(px)] + ws.out[px];
        loss += r * r;
        dout[px] = 2.0 * r;
    }

    std::vector<double> dh(chw, 0.0);
    conv_bwd_input(dout.data(), 1, params_.data() + lay.conv_out_w, dh.data(), c, h, wd, k);
    conv_bwd_params(dout.data(), 1, ws.h.data() + static_cast<std::size_t>(nb) * chw, c,
                    grad.data() + lay.conv_out_w, grad.data() + lay.conv_out_b, h, wd, k);

    std::vector<double> demb(e, 0.0);
    std::vector<double> dtmp(chw), dpre1(chw);
    for (int b = nb - 1; b >= 0; --b) {
        const auto& bl = lay.blocks[static_cast<std::size_t>(b)];
        const double* hin = ws.h.data() + static_cast<std::size_t>(b) * chw;
        const double* pre1 = ws.pre1.data() + static_cast<std::size_t>(b) * chw;
        const double* act1 = ws.act1.data() + static_cast<std::size_t>(b) * chw;
        const double* pre2 = ws.pre2.data() + static_cast<std::size_t>(b) * chw;

        // h_out = h_in + silu(pre2): residual passes dh through unchanged.
        for (std::size_t cpx = 0; cpx < chw; ++cpx) dtmp[cpx] = dh[cpx] * silu_prime(pre2[cpx]);
        std::fill(dpre1.begin(), dpre1.end(), 0.0);
        conv_bwd_input(dtmp.data(), c, params_.data() + bl.conv2_w, dpre1.data(), c, h, wd, k);
        conv_bwd_params(dtmp.data(), c, act1, c, grad.data() + bl.conv2_w,
                        grad.data() + bl.conv2_b, h, wd, k);
        for (std::size_t cpx = 0; cpx < chw; ++cpx) dpre1[cpx] *= silu_prime(pre1[cpx]);

        // Time-projection gradients: dtb[ch] = sum over pixels of dpre1.
        const double* pw = params_.data() + bl.tproj_w;
        for (int ch = 0; ch < c; ++ch) {
            const double* row = dpre1.data() + static_cast<std::size_t>(ch) * hw;
            double dtb = 0.0;
            for (std::size_t px = 0; px < hw; ++px) dtb += row[px];
            grad[bl.tproj_b + ch] += dtb;
            for (int q = 0; q < e; ++q) {
                grad[bl.tproj_w + static_cast<std::size_t>(ch) * e + q] += dtb * ws.emb[q];
                demb[q] += dtb * pw[static_cast<std::size_t>(ch) * e + q];
            }
        }

        conv_bwd_params(dpre1.data(), c, hin, c, grad.data() + bl.conv1_w,
                        grad.data() + bl.conv1_b, h, wd, k);
        conv_bwd_input(dpre1.data(), c, params_.data() + bl.conv1_w, dh.data(), c, h, wd, k);
    }

    conv_bwd_params(dh.data(), c, xt.data(), 1, grad.data() + lay.conv_in_w,
                    grad.data() + lay.conv_in_b, h, wd, k);

    // Time MLP backward.
    const double* tw = params_.data() + lay.time_w;
    for (int r = 0; r < e; ++r) {
        const double dz = demb[r] * silu_prime(ws.time_pre[r]);
        grad[lay.time_b + r] += dz;
        for (int q = 0; q < e; ++q)
            grad[lay.time_w + static_cast<std::size_t>(r) * e + q] += dz * ws.emb0[q];
        (void)tw;
    }
    return loss;
}

namespace {
void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}
void put_u16(std::ostream& out, std::uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
    out.write(b, 2);
}
void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(b, 8);
}
std::uint32_t get_u32(std::istream& in) {
    char b[4];
    in.read(b, 4);
    if (in.gcount() != 4) throw TruncatedError("truncated weight file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
}
std::uint16_t get_u16(std::istream& in) {
    char b[2];
    in.read(b, 2);
    if (in.gcount() != 2) throw TruncatedError("truncated weight file");
    return static_cast<std::uint16_t>(static_cast<unsigned char>(b[0]) |
                                      (static_cast<unsigned char>(b[1]) << 8));
}
double get_f64(std::istream& in) {
    char b[8];
    in.read(b, 8);
    if (in.gcount() != 8) throw TruncatedError("truncated weight file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}
}  // namespace

void ScoreNetwork::write(std::ostream& out) const {
    out.write("CHSW", 4);
    put_u16(out, 1);  // version
    put_u32(out, static_cast<std::uint32_t>(spec_.height));
    put_u32(out, static_cast<std::uint32_t>(spec_.width));
    put_u32(out, static_cast<std::uint32_t>(spec_.channels));
    put_u32(out, static_cast<std::uint32_t>(spec_.n_blocks));
    put_u32(out, static_cast<std::uint32_t>(spec_.kernel));
    put_u32(out, static_cast<std::uint32_t>(spec_.time_embed_dim));
    put_f64(out, spec_.fourier_scale);
    for (double f : fourier_freqs_) put_f64(out, f);
    for (double p : params_) put_f64(out, p);
}

ScoreNetwork ScoreNetwork::read(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, "CHSW", 4) != 0)
        throw FormatError("format error: bad weight-file magic");
    if (get_u16(in) != 1) throw FormatError("format error: unsupported weight-file version");
    ScoreNetwork net;
    net.spec_.height = static_cast<int>(get_u32(in));
    net.spec_.width = static_cast<int>(get_u32(in));
    net.spec_.channels = static_cast<int>(get_u32(in));
    net.spec_.n_blocks = static_cast<int>(get_u32(in));
    net.spec_.kernel = static_cast<int>(get_u32(in));
    net.spec_.time_embed_dim = static_cast<int>(get_u32(in));
    net.spec_.fourier_scale = get_f64(in);
    net.spec_.validate();
    net.fourier_freqs_.resize(static_cast<std::size_t>(net.spec_.time_embed_dim) / 2);
    for (auto& f : net.fourier_freqs_) f = get_f64(in);
    net.params_.resize(net.spec_.n_params());
    for (auto& p : net.params_) p = get_f64(in);
    return net;
}

void ScoreNetwork::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    write(out);
}

ScoreNetwork ScoreNetwork::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
    return read(in);
}

}  // namespace chda::score
