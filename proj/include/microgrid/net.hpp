#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include "microgrid/errors.hpp"
#include "microgrid/rng.hpp"

namespace microgrid {

/// Actor-critic network weights: one shared ReLU trunk feeding an 80-way
/// softmax policy head and a scalar value head. Plain row-major buffers;
/// all math is double precision so analytic gradients can be checked against
/// finite differences tightly.
struct ParameterSet {
    int input_dim = 7;
    int hidden_dim = 100;
    int action_dim = 80;
    std::vector<double> w1, b1; // trunk: hidden x input, hidden
    std::vector<double> wp, bp; // policy head: action x hidden, action
    std::vector<double> wv, bv; // value head: 1 x hidden, 1
    std::uint64_t version = 0;

    static ParameterSet zeros(int input = 7, int hidden = 100, int actions = 80) {
        ParameterSet p;
        p.input_dim = input;
        p.hidden_dim = hidden;
        p.action_dim = actions;
        p.w1.assign(static_cast<std::size_t>(hidden) * input, 0.0);
        p.b1.assign(static_cast<std::size_t>(hidden), 0.0);
        p.wp.assign(static_cast<std::size_t>(actions) * hidden, 0.0);
        p.bp.assign(static_cast<std::size_t>(actions), 0.0);
        p.wv.assign(static_cast<std::size_t>(hidden), 0.0);
        p.bv.assign(1, 0.0);
        return p;
    }

    /// Scaled-uniform fan-in initialization, deterministic per seed.
    static ParameterSet init(std::uint64_t seed, int input = 7, int hidden = 100, int actions = 80) {
        ParameterSet p = zeros(input, hidden, actions);
        Rng rng(derive_seed(seed, seed_tag::network));
        auto fill = [&rng](std::vector<double>& w, int fan_in) {
            std::uniform_real_distribution<double> u(-1.0 / std::sqrt(fan_in), 1.0 / std::sqrt(fan_in));
            for (auto& x : w) x = u(rng);
        };
        fill(p.w1, input);
        fill(p.wp, hidden);
        fill(p.wv, hidden);
        return p;
    }

    bool same_shape(const ParameterSet& o) const {
        return input_dim == o.input_dim && hidden_dim == o.hidden_dim && action_dim == o.action_dim;
    }
};

/// Gradients, shape-congruent with a ParameterSet.
struct GradientSet {
    std::vector<double> w1, b1, wp, bp, wv, bv;

    static GradientSet zeros_like(const ParameterSet& p) {
        GradientSet g;
        g.w1.assign(p.w1.size(), 0.0);
        g.b1.assign(p.b1.size(), 0.0);
        g.wp.assign(p.wp.size(), 0.0);
        g.bp.assign(p.bp.size(), 0.0);
        g.wv.assign(p.wv.size(), 0.0);
        g.bv.assign(p.bv.size(), 0.0);
        return g;
    }

    void add(const GradientSet& o) {
        auto acc = [](std::vector<double>& a, const std::vector<double>& b) {
            for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
        };
        acc(w1, o.w1); acc(b1, o.b1); acc(wp, o.wp); acc(bp, o.bp); acc(wv, o.wv); acc(bv, o.bv);
    }

    void scale(double k) {
        for (auto* v : {&w1, &b1, &wp, &bp, &wv, &bv})
            for (auto& x : *v) x *= k;
    }
};

struct ForwardPass {
    std::vector<double> hidden;  // post-ReLU
    std::vector<double> logits;
    std::vector<double> policy;  // softmax(logits)
    double value = 0.0;
};

inline ForwardPass forward(const ParameterSet& p, const std::vector<double>& obs) {
    if (static_cast<int>(obs.size()) != p.input_dim)
        throw DomainError("observation size mismatch");
    for (double v : obs)
        if (!std::isfinite(v)) throw DomainError("non-finite observation component");

    ForwardPass f;
    f.hidden.resize(static_cast<std::size_t>(p.hidden_dim));
    for (int h = 0; h < p.hidden_dim; ++h) {
        double z = p.b1[static_cast<std::size_t>(h)];
        const double* row = &p.w1[static_cast<std::size_t>(h) * p.input_dim];
        for (int i = 0; i < p.input_dim; ++i) z += row[i] * obs[static_cast<std::size_t>(i)];
        f.hidden[static_cast<std::size_t>(h)] = z > 0.0 ? z : 0.0;
    }

    f.logits.resize(static_cast<std::size_t>(p.action_dim));
    double max_logit = -1e300;
    for (int a = 0; a < p.action_dim; ++a) {
        double z = p.bp[static_cast<std::size_t>(a)];
        const double* row = &p.wp[static_cast<std::size_t>(a) * p.hidden_dim];
        for (int h = 0; h < p.hidden_dim; ++h) z += row[h] * f.hidden[static_cast<std::size_t>(h)];
        f.logits[static_cast<std::size_t>(a)] = z;
        max_logit = std::max(max_logit, z);
    }
    f.policy.resize(static_cast<std::size_t>(p.action_dim));
    double sum = 0.0;
    for (int a = 0; a < p.action_dim; ++a) {
        double e = std::exp(f.logits[static_cast<std::size_t>(a)] - max_logit);
        f.policy[static_cast<std::size_t>(a)] = e;
        sum += e;
    }
    for (auto& v : f.policy) v /= sum;

    f.value = p.bv[0];
    for (int h = 0; h < p.hidden_dim; ++h) f.value += p.wv[static_cast<std::size_t>(h)] * f.hidden[static_cast<std::size_t>(h)];
    return f;
}

inline double policy_entropy(const std::vector<double>& policy) {
    double h = 0.0;
    for (double p : policy)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

namespace detail {

/// Shared backprop tail: given d(loss)/d(logits) and d(loss)/d(value) at a
/// completed forward pass, accumulates gradients for every parameter.
inline GradientSet backprop(const ParameterSet& p, const std::vector<double>& obs,
                            const ForwardPass& f, const std::vector<double>& dlogits,
                            double dvalue) {
    GradientSet g = GradientSet::zeros_like(p);
    for (int a = 0; a < p.action_dim; ++a) {
        g.bp[static_cast<std::size_t>(a)] = dlogits[static_cast<std::size_t>(a)];
        double* row = &g.wp[static_cast<std::size_t>(a) * p.hidden_dim];
        for (int h = 0; h < p.hidden_dim; ++h)
            row[h] = dlogits[static_cast<std::size_t>(a)] * f.hidden[static_cast<std::size_t>(h)];
    }
    g.bv[0] = dvalue;
    for (int h = 0; h < p.hidden_dim; ++h)
        g.wv[static_cast<std::size_t>(h)] = dvalue * f.hidden[static_cast<std::size_t>(h)];

    for (int h = 0; h < p.hidden_dim; ++h) {
        if (f.hidden[static_cast<std::size_t>(h)] <= 0.0) continue; // ReLU gate
        double dh = dvalue * p.wv[static_cast<std::size_t>(h)];
        for (int a = 0; a < p.action_dim; ++a)
            dh += dlogits[static_cast<std::size_t>(a)] * p.wp[static_cast<std::size_t>(a) * p.hidden_dim + h];
        g.b1[static_cast<std::size_t>(h)] = dh;
        double* row = &g.w1[static_cast<std::size_t>(h) * p.input_dim];
        for (int i = 0; i < p.input_dim; ++i) row[i] = dh * obs[static_cast<std::size_t>(i)];
    }
    return g;
}

} // namespace detail

/// Gradient of the joint actor-critic loss
///   L = -log pi(a|s) * advantage - entropy_coef * H(pi) + (target - v)^2
/// with the advantage treated as a constant.
inline GradientSet backward(const ParameterSet& p, const std::vector<double>& obs, int action_index,
                            double advantage, double target_value, double entropy_coef) {
    if (action_index < 0 || action_index >= p.action_dim)
        throw DomainError("action index outside policy head");
    ForwardPass f = forward(p, obs);
    double h_pi = policy_entropy(f.policy);
    std::vector<double> dlogits(static_cast<std::size_t>(p.action_dim));
    for (int a = 0; a < p.action_dim; ++a) {
        double pa = f.policy[static_cast<std::size_t>(a)];
        double d = advantage * (pa - (a == action_index ? 1.0 : 0.0));
        // dH/dz_a = -pi_a (log pi_a + H); loss has -c*H.
        d += entropy_coef * pa * (std::log(std::max(pa, 1e-300)) + h_pi);
        dlogits[static_cast<std::size_t>(a)] = d;
    }
    double dvalue = -2.0 * (target_value - f.value);
    return detail::backprop(p, obs, f, dlogits, dvalue);
}

/// Gradient of the Q-regression loss (target - q[a])^2, reading the policy
/// head as Q-values. Used by the DQN-family baselines; the value head is
/// untouched.
inline GradientSet q_backward(const ParameterSet& p, const std::vector<double>& obs, int action_index,
                              double target) {
    if (action_index < 0 || action_index >= p.action_dim)
        throw DomainError("action index outside Q head");
    ForwardPass f = forward(p, obs);
    std::vector<double> dlogits(static_cast<std::size_t>(p.action_dim), 0.0);
    dlogits[static_cast<std::size_t>(action_index)] =
        -2.0 * (target - f.logits[static_cast<std::size_t>(action_index)]);
    return detail::backprop(p, obs, f, dlogits, 0.0);
}

/// The single shared object of the training topology. Updates serialize per
/// application; snapshots are consistent copies and may lag in-flight
/// updates.
class ParameterStore {
public:
    explicit ParameterStore(ParameterSet initial) : params_(std::move(initial)) {}

    void apply_gradients(const GradientSet& g, double lr) {
        std::lock_guard<std::mutex> lock(mu_);
        check_shape(g);
        auto apply = [lr](std::vector<double>& w, const std::vector<double>& gw) {
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * gw[i];
        };
        apply(params_.w1, g.w1);
        apply(params_.b1, g.b1);
        apply(params_.wp, g.wp);
        apply(params_.bp, g.bp);
        apply(params_.wv, g.wv);
        apply(params_.bv, g.bv);
        params_.version += 1;
    }

    ParameterSet snapshot() const {
        std::lock_guard<std::mutex> lock(mu_);
        return params_;
    }

    std::uint64_t version() const {
        std::lock_guard<std::mutex> lock(mu_);
        return params_.version;
    }

private:
    void check_shape(const GradientSet& g) const {
        if (g.w1.size() != params_.w1.size() || g.b1.size() != params_.b1.size() ||
            g.wp.size() != params_.wp.size() || g.bp.size() != params_.bp.size() ||
            g.wv.size() != params_.wv.size() || g.bv.size() != params_.bv.size())
            throw DomainError("gradient shape does not match parameter store");
    }

    mutable std::mutex mu_;
    ParameterSet params_;
};

// --- checkpoint io -------------------------------------------------------
// Flat binary layout: 8-byte magic, three little-endian u32 dims (input,
// hidden, actions), then all weights as little-endian IEEE-754 doubles in
// the order w1, b1, wp, bp, wv, bv.

inline constexpr char kCheckpointMagic[8] = {'M', 'G', 'R', 'L', 'N', 'E', 'T', '1'};

namespace detail {
inline void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}
inline std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
inline void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}
inline double get_f64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}
} // namespace detail

inline void save_checkpoint(const ParameterSet& p, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out.write(kCheckpointMagic, 8);
    detail::put_u32(out, static_cast<std::uint32_t>(p.input_dim));
    detail::put_u32(out, static_cast<std::uint32_t>(p.hidden_dim));
    detail::put_u32(out, static_cast<std::uint32_t>(p.action_dim));
    for (const auto* v : {&p.w1, &p.b1, &p.wp, &p.bp, &p.wv, &p.bv})
        for (double x : *v) detail::put_f64(out, x);
    if (!out) throw IoError("short write on checkpoint: " + path);
}

inline ParameterSet load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw DataError("not a checkpoint file: " + path);
    int input = static_cast<int>(detail::get_u32(in));
    int hidden = static_cast<int>(detail::get_u32(in));
    int actions = static_cast<int>(detail::get_u32(in));
    if (input < 1 || hidden < 1 || actions < 1 || input > 65536 || hidden > 65536 || actions > 65536)
        throw DataError("checkpoint has implausible shape header: " + path);
    ParameterSet p = ParameterSet::zeros(input, hidden, actions);
    for (auto* v : {&p.w1, &p.b1, &p.wp, &p.bp, &p.wv, &p.bv})
        for (auto& x : *v) x = detail::get_f64(in);
    if (!in) throw DataError("checkpoint truncated: " + path);
    return p;
}

} // namespace microgrid
