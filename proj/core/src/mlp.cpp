#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>

#include "bdps/errors.hpp"
#include "bdps/score.hpp"
#include "mlp_detail.hpp"

static_assert(std::endian::native == std::endian::little, "model container assumes a little-endian host");

namespace bdps {

namespace {

struct Workspace {
    // acts[0] is the assembled input; acts[l+1] the activation after layer l.
    std::vector<std::vector<double>> acts;
    std::vector<std::vector<double>> pre;  // pre-activations per layer
};

void assemble_input(const std::vector<double>& x, double ab, std::vector<double>& in) {
    in.resize(x.size() + 2);
    std::copy(x.begin(), x.end(), in.begin());
    in[x.size()] = std::sqrt(ab);
    in[x.size() + 1] = std::sqrt(1.0 - ab);
}

void forward(const MlpScore& net, const std::vector<double>& input, Workspace& ws) {
    const size_t L = net.weights.size();
    ws.acts.assign(L + 1, {});
    ws.pre.assign(L, {});
    ws.acts[0] = input;
    for (size_t l = 0; l < L; ++l) {
        const int rows = net.widths[l + 1];
        const int cols = net.widths[l];
        const auto& W = net.weights[l];
        const auto& b = net.biases[l];
        const auto& a = ws.acts[l];
        auto& z = ws.pre[l];
        z.resize(rows);
        for (int r = 0; r < rows; ++r) {
            double acc = b[r];
            const double* wr = &W[static_cast<size_t>(r) * cols];
            for (int c = 0; c < cols; ++c) acc += wr[c] * a[c];
            z[r] = acc;
        }
        auto& out = ws.acts[l + 1];
        out = z;
        if (l + 1 < L)
            for (double& v : out) v = std::tanh(v);
    }
}

// Backprop from the output cotangent. Returns the gradient with respect to the
// assembled input; parameter gradients are accumulated when accums are given.
void backward(const MlpScore& net, const Workspace& ws, const std::vector<double>& cot,
              std::vector<double>& grad_input, std::vector<std::vector<double>>* grad_w,
              std::vector<std::vector<double>>* grad_b) {
    const size_t L = net.weights.size();
    std::vector<double> delta = cot;  // gradient wrt pre-activation of the current layer
    for (size_t l = L; l-- > 0;) {
        const int rows = net.widths[l + 1];
        const int cols = net.widths[l];
        const auto& W = net.weights[l];
        if (l + 1 < L) {
            // through tanh (delta currently wrt activation)
            for (int r = 0; r < rows; ++r) {
                const double t = std::tanh(ws.pre[l][r]);
                delta[r] *= 1.0 - t * t;
            }
        }
        if (grad_w) {
            auto& gw = (*grad_w)[l];
            auto& gb = (*grad_b)[l];
            const auto& a = ws.acts[l];
            for (int r = 0; r < rows; ++r) {
                const double d = delta[r];
                gb[r] += d;
                double* gwr = &gw[static_cast<size_t>(r) * cols];
                for (int c = 0; c < cols; ++c) gwr[c] += d * a[c];
            }
        }
        std::vector<double> next(cols, 0.0);
        for (int r = 0; r < rows; ++r) {
            const double d = delta[r];
            const double* wr = &W[static_cast<size_t>(r) * cols];
            for (int c = 0; c < cols; ++c) next[c] += d * wr[c];
        }
        delta = std::move(next);
    }
    grad_input = std::move(delta);
}

}  // namespace

void mlp_forward(const MlpScore& net, const std::vector<double>& x, double ab, std::vector<double>& out) {
    Workspace ws;
    std::vector<double> in;
    assemble_input(x, ab, in);
    forward(net, in, ws);
    out = ws.acts.back();
}

void mlp_input_vjp(const MlpScore& net, const std::vector<double>& x, double ab, const std::vector<double>& cot,
                   std::vector<double>& grad_x) {
    Workspace ws;
    std::vector<double> in;
    assemble_input(x, ab, in);
    forward(net, in, ws);
    std::vector<double> grad_in;
    backward(net, ws, cot, grad_in, nullptr, nullptr);
    grad_x.assign(grad_in.begin(), grad_in.begin() + static_cast<long>(x.size()));
}

MlpScore make_mlp(int signal_dim, const std::vector<int>& hidden_widths, NoiseStream& rng) {
    if (signal_dim < 1) throw ParameterError("make_mlp: signal_dim must be >= 1");
    MlpScore net;
    net.widths.push_back(signal_dim + 2);
    for (int h : hidden_widths) {
        if (h < 1) throw ParameterError("make_mlp: hidden widths must be >= 1");
        net.widths.push_back(h);
    }
    net.widths.push_back(signal_dim);
    const size_t L = net.widths.size() - 1;
    net.weights.resize(L);
    net.biases.resize(L);
    for (size_t l = 0; l < L; ++l) {
        const int rows = net.widths[l + 1];
        const int cols = net.widths[l];
        const double bound = std::sqrt(6.0 / (rows + cols));
        net.weights[l].resize(static_cast<size_t>(rows) * cols);
        for (double& w : net.weights[l]) w = (2.0 * rng.uniform() - 1.0) * bound;
        net.biases[l].assign(rows, 0.0);
    }
    return net;
}

DsmResult dsm_train(const std::vector<SignalGrid>& dataset, const NoiseSchedule& sched, const TrainConfig& config) {
    if (dataset.empty()) throw ParameterError("dsm_train: empty dataset");
    const SignalGrid& first = dataset.front();
    for (const auto& s : dataset) require_same_shape(s, first, "dsm_train");
    if (config.batch_size < 1) throw ParameterError("dsm_train: batch_size must be >= 1");
    if (config.holdout_fraction < 0.0 || config.holdout_fraction >= 1.0)
        throw ParameterError("dsm_train: holdout_fraction outside [0, 1)");

    const int n = static_cast<int>(first.size());
    const int N = sched.n_steps();

    NoiseStream root(config.seed, 0x64736D00ull);  // "dsm"
    NoiseStream init_rng = root.derive(1);
    NoiseStream batch_rng = root.derive(2);

    MlpScore net = make_mlp(n, config.hidden_widths, init_rng);

    const size_t n_holdout = static_cast<size_t>(config.holdout_fraction * dataset.size());
    const size_t n_train = dataset.size() - n_holdout;
    if (n_train == 0) throw ParameterError("dsm_train: holdout leaves no training data");

    // Fixed holdout probes: the same (step, noise) pairs are replayed every
    // epoch so the holdout curve is comparable across epochs.
    struct Probe {
        int step;
        std::vector<double> x_i;
        std::vector<double> target;
    };
    std::vector<Probe> holdout;
    {
        NoiseStream hold_rng = root.derive(3);
        for (size_t s = n_train; s < dataset.size(); ++s) {
            Probe p;
            p.step = 1 + static_cast<int>(hold_rng.next_u64() % static_cast<uint64_t>(N));
            const double ab = sched.alpha_bar(p.step);
            const double sa = std::sqrt(ab), sb = std::sqrt(1.0 - ab);
            p.x_i.resize(n);
            p.target.resize(n);
            for (int j = 0; j < n; ++j) {
                const double z = hold_rng.normal();
                p.x_i[j] = sa * dataset[s].v[j] + sb * z;
                p.target[j] = -z / sb;
            }
            holdout.push_back(std::move(p));
        }
    }

    const size_t L = net.weights.size();
    std::vector<std::vector<double>> vel_w(L), vel_b(L), grad_w(L), grad_b(L);
    for (size_t l = 0; l < L; ++l) {
        vel_w[l].assign(net.weights[l].size(), 0.0);
        vel_b[l].assign(net.biases[l].size(), 0.0);
        grad_w[l].assign(net.weights[l].size(), 0.0);
        grad_b[l].assign(net.biases[l].size(), 0.0);
    }

    DsmResult result;
    std::vector<size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> in, out, cot(n), grad_in;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // Fisher-Yates reshuffle per epoch.
        for (size_t j = n_train; j > 1; --j) {
            const size_t k = batch_rng.next_u64() % j;
            std::swap(order[j - 1], order[k]);
        }

        double epoch_loss = 0.0;
        size_t n_batches = 0;
        for (size_t pos = 0; pos < n_train; pos += config.batch_size) {
            const size_t bsz = std::min<size_t>(config.batch_size, n_train - pos);
            for (size_t l = 0; l < L; ++l) {
                std::fill(grad_w[l].begin(), grad_w[l].end(), 0.0);
                std::fill(grad_b[l].begin(), grad_b[l].end(), 0.0);
            }
            double batch_loss = 0.0;
            for (size_t b = 0; b < bsz; ++b) {
                const SignalGrid& x0 = dataset[order[pos + b]];
                const int step = 1 + static_cast<int>(batch_rng.next_u64() % static_cast<uint64_t>(N));
                const double ab = sched.alpha_bar(step);
                const double sa = std::sqrt(ab), sb = std::sqrt(1.0 - ab);
                in.resize(n + 2);
                for (int j = 0; j < n; ++j) {
                    const double z = batch_rng.normal();
                    in[j] = sa * x0.v[j] + sb * z;
                    cot[j] = -z / sb;  // reuse cot as the target buffer first
                }
                in[n] = sa;
                in[n + 1] = sb;
                Workspace ws;
                forward(net, in, ws);
                const auto& pred = ws.acts.back();
                double loss = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double r = pred[j] - cot[j];
                    loss += r * r;
                    cot[j] = 2.0 * r / static_cast<double>(bsz);
                }
                batch_loss += loss;
                backward(net, ws, cot, grad_in, &grad_w, &grad_b);
            }
            batch_loss /= static_cast<double>(bsz);
            epoch_loss += batch_loss;
            ++n_batches;

            for (size_t l = 0; l < L; ++l) {
                for (size_t j = 0; j < net.weights[l].size(); ++j) {
                    vel_w[l][j] = config.momentum * vel_w[l][j] - config.learning_rate * grad_w[l][j];
                    net.weights[l][j] += vel_w[l][j];
                }
                for (size_t j = 0; j < net.biases[l].size(); ++j) {
                    vel_b[l][j] = config.momentum * vel_b[l][j] - config.learning_rate * grad_b[l][j];
                    net.biases[l][j] += vel_b[l][j];
                }
            }
        }
        epoch_loss /= static_cast<double>(n_batches);
        if (!std::isfinite(epoch_loss))
            throw DivergenceError("dsm_train: non-finite loss at epoch " + std::to_string(epoch), epoch);
        result.train_loss.push_back(epoch_loss);

        if (!holdout.empty()) {
            double hl = 0.0;
            for (const auto& p : holdout) {
                Workspace ws;
                assemble_input(p.x_i, sched.alpha_bar(p.step), in);
                forward(net, in, ws);
                const auto& pred = ws.acts.back();
                for (int j = 0; j < n; ++j) {
                    const double r = pred[j] - p.target[j];
                    hl += r * r;
                }
            }
            result.holdout_loss.push_back(hl / static_cast<double>(holdout.size()));
        }
    }

    result.model = ScoreModel::mlp(std::move(net), first.h, first.w, first.c);
    return result;
}

// --- persistence --------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'B', 'D', 'P', 'S', 'M', 'D', 'L', '1'};

template <typename T>
void write_raw(std::ofstream& f, const T& v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& f) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw IoError("model file truncated");
    return v;
}

}  // namespace

void save_model(const ScoreModel& model, const std::string& path) {
    const auto* net = std::get_if<MlpScore>(&model.payload());
    if (!net) throw CapabilityError("save_model: only MLP models persist to the binary container");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("save_model: cannot open " + path);
    f.write(kMagic, sizeof(kMagic));
    write_raw<uint32_t>(f, static_cast<uint32_t>(model.domain_h()));
    write_raw<uint32_t>(f, static_cast<uint32_t>(model.domain_w()));
    write_raw<uint32_t>(f, static_cast<uint32_t>(model.domain_c()));
    write_raw<uint32_t>(f, static_cast<uint32_t>(net->widths.size()));
    for (int w : net->widths) write_raw<uint32_t>(f, static_cast<uint32_t>(w));
    write_raw<uint8_t>(f, 0);  // activation tag: 0 = tanh
    for (size_t l = 0; l + 1 < net->widths.size(); ++l) {
        f.write(reinterpret_cast<const char*>(net->weights[l].data()),
                static_cast<std::streamsize>(net->weights[l].size() * sizeof(double)));
        f.write(reinterpret_cast<const char*>(net->biases[l].data()),
                static_cast<std::streamsize>(net->biases[l].size() * sizeof(double)));
    }
    if (!f) throw IoError("save_model: write failed for " + path);
}

ScoreModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load_model: cannot open " + path);
    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IoError("load_model: " + path + " is not a BDPSMDL1 container");
    const int h = static_cast<int>(read_raw<uint32_t>(f));
    const int w = static_cast<int>(read_raw<uint32_t>(f));
    const int c = static_cast<int>(read_raw<uint32_t>(f));
    const uint32_t n_widths = read_raw<uint32_t>(f);
    if (n_widths < 2 || n_widths > 64) throw IoError("load_model: implausible layer count");
    MlpScore net;
    net.widths.resize(n_widths);
    for (auto& wd : net.widths) wd = static_cast<int>(read_raw<uint32_t>(f));
    const uint8_t act = read_raw<uint8_t>(f);
    if (act != 0) throw IoError("load_model: unknown activation tag");
    net.activation = "tanh";
    const size_t L = n_widths - 1;
    net.weights.resize(L);
    net.biases.resize(L);
    for (size_t l = 0; l < L; ++l) {
        net.weights[l].resize(static_cast<size_t>(net.widths[l + 1]) * net.widths[l]);
        net.biases[l].resize(net.widths[l + 1]);
        f.read(reinterpret_cast<char*>(net.weights[l].data()),
               static_cast<std::streamsize>(net.weights[l].size() * sizeof(double)));
        f.read(reinterpret_cast<char*>(net.biases[l].data()),
               static_cast<std::streamsize>(net.biases[l].size() * sizeof(double)));
        if (!f) throw IoError("load_model: truncated weight block");
    }
    return ScoreModel::mlp(std::move(net), h, w, c);
}

}  // namespace bdps
