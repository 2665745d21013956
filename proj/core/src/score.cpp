#include "bdps/score.hpp"

#include <algorithm>
#include <cmath>

#include "bdps/errors.hpp"

namespace bdps {

ScoreModel ScoreModel::gaussian(SignalGrid mean, SignalGrid var) {
    require_same_shape(mean, var, "ScoreModel::gaussian");
    for (double v : var.v)
        if (!(v > 0.0)) throw ParameterError("ScoreModel::gaussian: variances must be > 0");
    ScoreModel m;
    m.h_ = mean.h;
    m.w_ = mean.w;
    m.c_ = mean.c;
    m.payload_ = GaussianScore{std::move(mean), std::move(var)};
    return m;
}

ScoreModel ScoreModel::gmm(std::vector<GmmComponent> components) {
    if (components.empty()) throw ParameterError("ScoreModel::gmm: need at least one component");
    double wsum = 0.0;
    for (const auto& comp : components) {
        require_same_shape(comp.mean, components.front().mean, "ScoreModel::gmm");
        require_same_shape(comp.var, comp.mean, "ScoreModel::gmm");
        if (!(comp.weight > 0.0)) throw ParameterError("ScoreModel::gmm: weights must be > 0");
        for (double v : comp.var.v)
            if (!(v > 0.0)) throw ParameterError("ScoreModel::gmm: variances must be > 0");
        wsum += comp.weight;
    }
    if (std::fabs(wsum - 1.0) > 1e-9) throw ParameterError("ScoreModel::gmm: weights must sum to 1");
    ScoreModel m;
    m.h_ = components.front().mean.h;
    m.w_ = components.front().mean.w;
    m.c_ = components.front().mean.c;
    m.payload_ = GmmScore{std::move(components)};
    return m;
}

ScoreModel ScoreModel::mlp(MlpScore net, int h, int w, int c) {
    const int n = h * w * c;
    if (net.widths.size() < 2 || net.widths.front() != n + 2 || net.widths.back() != n)
        throw ParameterError("ScoreModel::mlp: widths must run from n+2 to n");
    ScoreModel m;
    m.h_ = h;
    m.w_ = w;
    m.c_ = c;
    m.payload_ = std::move(net);
    return m;
}

ScoreModel ScoreModel::standard_normal(int h, int w, int c) {
    SignalGrid mean(h, w, c);
    SignalGrid var(h, w, c);
    for (double& v : var.v) v = 1.0;
    return gaussian(std::move(mean), std::move(var));
}

void ScoreModel::check_domain(const SignalGrid& x, const char* where) const {
    if (x.h != h_ || x.w != w_ || x.c != c_)
        throw ShapeError(std::string(where) + ": signal " + x.shape_str() + " does not match model domain " +
                         std::to_string(h_) + "x" + std::to_string(w_) + "x" + std::to_string(c_));
}

namespace {

// Diffused marginal of a diagonal Gaussian: N(sqrt(ab) mu, ab var + (1 - ab)).
void diffused_moments(const GaussianScore& g, double ab, std::vector<double>& mean, std::vector<double>& var) {
    const double s = std::sqrt(ab);
    mean.resize(g.mean.size());
    var.resize(g.mean.size());
    for (size_t j = 0; j < g.mean.size(); ++j) {
        mean[j] = s * g.mean.v[j];
        var[j] = ab * g.var.v[j] + (1.0 - ab);
    }
}

SignalGrid gaussian_score(const GaussianScore& g, const SignalGrid& x, double ab) {
    std::vector<double> mean, var;
    diffused_moments(g, ab, mean, var);
    SignalGrid out = x;
    for (size_t j = 0; j < out.size(); ++j) out.v[j] = -(x.v[j] - mean[j]) / var[j];
    return out;
}

struct GmmEval {
    std::vector<double> resp;                 // responsibilities
    std::vector<std::vector<double>> comp_score;
    std::vector<std::vector<double>> comp_var;
    SignalGrid score;
};

GmmEval gmm_eval(const GmmScore& g, const SignalGrid& x, double ab) {
    const size_t K = g.components.size();
    GmmEval ev;
    ev.resp.resize(K);
    ev.comp_score.resize(K);
    ev.comp_var.resize(K);
    std::vector<double> log_lik(K);
    for (size_t k = 0; k < K; ++k) {
        std::vector<double> mean, var;
        diffused_moments(GaussianScore{g.components[k].mean, g.components[k].var}, ab, mean, var);
        double ll = std::log(g.components[k].weight);
        auto& sc = ev.comp_score[k];
        sc.resize(x.size());
        for (size_t j = 0; j < x.size(); ++j) {
            const double d = x.v[j] - mean[j];
            ll -= 0.5 * (d * d / var[j] + std::log(2.0 * M_PI * var[j]));
            sc[j] = -d / var[j];
        }
        log_lik[k] = ll;
        ev.comp_var[k] = std::move(var);
    }
    const double m = *std::max_element(log_lik.begin(), log_lik.end());
    double z = 0.0;
    for (size_t k = 0; k < K; ++k) {
        ev.resp[k] = std::exp(log_lik[k] - m);
        z += ev.resp[k];
    }
    for (double& r : ev.resp) r /= z;

    ev.score = zeros_like(x);
    for (size_t k = 0; k < K; ++k)
        for (size_t j = 0; j < x.size(); ++j) ev.score.v[j] += ev.resp[k] * ev.comp_score[k][j];
    return ev;
}

}  // namespace

SignalGrid score_eval(const ScoreModel& model, const SignalGrid& x, int i, const NoiseSchedule& sched) {
    model.check_domain(x, "score_eval");
    const double ab = sched.alpha_bar(i);
    if (const auto* g = std::get_if<GaussianScore>(&model.payload())) return gaussian_score(*g, x, ab);
    if (const auto* g = std::get_if<GmmScore>(&model.payload())) return gmm_eval(*g, x, ab).score;
    const auto& net = std::get<MlpScore>(model.payload());
    SignalGrid out = x;
    mlp_forward(net, x.v, ab, out.v);
    return out;
}

SignalGrid score_vjp(const ScoreModel& model, const SignalGrid& x, int i, const NoiseSchedule& sched,
                     const SignalGrid& cotangent) {
    model.check_domain(x, "score_vjp");
    require_same_shape(x, cotangent, "score_vjp");
    const double ab = sched.alpha_bar(i);

    if (const auto* g = std::get_if<GaussianScore>(&model.payload())) {
        std::vector<double> mean, var;
        diffused_moments(*g, ab, mean, var);
        SignalGrid out = cotangent;
        for (size_t j = 0; j < out.size(); ++j) out.v[j] = -cotangent.v[j] / var[j];
        return out;
    }

    if (const auto* g = std::get_if<GmmScore>(&model.payload())) {
        // Hessian of the log mixture: sum_k r_k (s_k s_k^T - diag(1/d_k)) - s s^T.
        const GmmEval ev = gmm_eval(*g, x, ab);
        SignalGrid out = zeros_like(x);
        for (size_t k = 0; k < g->components.size(); ++k) {
            double sc = 0.0;
            for (size_t j = 0; j < x.size(); ++j) sc += ev.comp_score[k][j] * cotangent.v[j];
            for (size_t j = 0; j < x.size(); ++j)
                out.v[j] += ev.resp[k] * (ev.comp_score[k][j] * sc - cotangent.v[j] / ev.comp_var[k][j]);
        }
        const double sc = dot(ev.score, cotangent);
        for (size_t j = 0; j < x.size(); ++j) out.v[j] -= ev.score.v[j] * sc;
        return out;
    }

    const auto& net = std::get<MlpScore>(model.payload());
    SignalGrid out = x;
    mlp_input_vjp(net, x.v, ab, cotangent.v, out.v);
    return out;
}

}  // namespace bdps
