#pragma once

#include <string>
#include <variant>
#include <vector>

#include "bdps/grid.hpp"
#include "bdps/rng.hpp"
#include "bdps/schedule.hpp"

namespace bdps {

// Score models approximate the marginal score grad log p_i(.) of the diffused
// data distribution. Three interchangeable variants: analytic Gaussian,
// analytic Gaussian mixture (both exact, used as test oracles and toy priors),
// and a small trainable MLP.

/// Gaussian prior N(mean, diag(var)); the diffused marginal at step i is
/// N(sqrt(ab) mean, ab var + (1 - ab)) coordinatewise.
struct GaussianScore {
    SignalGrid mean;
    SignalGrid var;
};

struct GmmComponent {
    double weight = 1.0;
    SignalGrid mean;
    SignalGrid var;
};

struct GmmScore {
    std::vector<GmmComponent> components;
};

/// Fully-connected net mapping the flattened signal (plus the two time
/// features sqrt(ab_i), sqrt(1 - ab_i) appended to the input) to a score of
/// the same dimension. Hidden activations are tanh; the output is linear.
struct MlpScore {
    std::vector<int> widths;  // [n + 2, hidden..., n]
    std::vector<std::vector<double>> weights;  // weights[l]: widths[l+1] x widths[l], row-major
    std::vector<std::vector<double>> biases;
    std::string activation = "tanh";
};

class ScoreModel {
public:
    using Payload = std::variant<GaussianScore, GmmScore, MlpScore>;

    ScoreModel() = default;

    static ScoreModel gaussian(SignalGrid mean, SignalGrid var);
    static ScoreModel gmm(std::vector<GmmComponent> components);
    static ScoreModel mlp(MlpScore net, int h, int w, int c);

    /// Standard-normal prior over the given shape.
    static ScoreModel standard_normal(int h, int w, int c = 1);

    int domain_h() const { return h_; }
    int domain_w() const { return w_; }
    int domain_c() const { return c_; }

    const Payload& payload() const { return payload_; }
    Payload& payload() { return payload_; }

    bool is_mlp() const { return std::holds_alternative<MlpScore>(payload_); }

    void check_domain(const SignalGrid& x, const char* where) const;

private:
    Payload payload_;
    int h_ = 0, w_ = 0, c_ = 1;
};

/// Evaluates the model score at x, step i.
SignalGrid score_eval(const ScoreModel& model, const SignalGrid& x, int i, const NoiseSchedule& sched);

/// Vector-Jacobian product of the score map at x: cot^T d(score)/dx.
/// Closed-form Hessian for the analytic variants, reverse mode for the MLP.
SignalGrid score_vjp(const ScoreModel& model, const SignalGrid& x, int i, const NoiseSchedule& sched,
                     const SignalGrid& cotangent);

// --- MLP construction, training, persistence ---------------------------------

struct TrainConfig {
    int epochs = 100;
    int batch_size = 128;
    double learning_rate = 1e-3;
    double momentum = 0.9;
    std::vector<int> hidden_widths = {128, 128};
    uint64_t seed = 0;
    double holdout_fraction = 0.0;  // reserve this share of the dataset for holdout loss
};

struct DsmResult {
    ScoreModel model;
    std::vector<double> train_loss;    // per epoch
    std::vector<double> holdout_loss;  // per epoch, empty when no holdout
};

/// Freshly initialized MLP for signals of the given shape (Xavier-uniform, seeded).
MlpScore make_mlp(int signal_dim, const std::vector<int>& hidden_widths, NoiseStream& rng);

/// Denoising score matching: minimizes E ||s(x_i, i) + z / sqrt(1 - ab_i)||^2
/// over uniform steps i and fresh noise z, by SGD with momentum. Deterministic
/// in the config seed. Zero epochs returns the initialization with empty history.
DsmResult dsm_train(const std::vector<SignalGrid>& dataset, const NoiseSchedule& sched, const TrainConfig& config);

/// Binary model container (magic "BDPSMDL1", little-endian 64-bit weights).
/// Round-trips bit-exactly.
void save_model(const ScoreModel& model, const std::string& path);
ScoreModel load_model(const std::string& path);

}  // namespace bdps
