#include <doctest.h>

#include <cmath>

#include "avshield/autograd.hpp"
#include "avshield/parallel.hpp"
#include "avshield/rng.hpp"

using namespace avshield;
using namespace avshield::ag;

namespace {

// central finite differences on an arbitrary scalar functional of a leaf
double fd_gradient(const std::function<double(const Tensor&)>& f, Tensor at, std::int64_t idx,
                   double h = 1e-5) {
    Tensor hi = at.clone(), lo = at.clone();
    hi[idx] += h;
    lo[idx] -= h;
    return (f(hi) - f(lo)) / (2.0 * h);
}

void check_gradients(const std::function<NodePtr(const NodePtr&)>& build, Tensor at,
                     double tol = 1e-6) {
    NodePtr x = leaf(at.clone());
    NodePtr y = build(x);
    backward(y);
    auto scalar_eval = [&](const Tensor& t) { return build(constant(t))->value[0]; };
    for (std::int64_t i = 0; i < at.size(); ++i) {
        const double fd = fd_gradient(scalar_eval, at, i);
        const double an = x->grad[i];
        const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
        CHECK(std::abs(fd - an) / denom < tol);
    }
}

} // namespace

TEST_CASE("rng determinism and stream isolation") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.uniform() == b.uniform());
        CHECK(a.normal() == b.normal());
    }
    // derived streams do not depend on parent consumption
    Rng c(7);
    c.uniform();
    c.uniform();
    Rng d(7);
    CHECK(c.derive("x").uniform() == d.derive("x").uniform());
    CHECK(Rng(1).derive("x").uniform() != Rng(1).derive("y").uniform());
}

TEST_CASE("rng normal moments") {
    Rng rng(9);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double v = rng.normal();
        sum += v;
        sq += v * v;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("rng uniform_int covers inclusive range") {
    Rng rng(3);
    int lo_seen = 100, hi_seen = -1;
    for (int i = 0; i < 2000; ++i) {
        const int v = static_cast<int>(rng.uniform_int(3, 9));
        CHECK(v >= 3);
        CHECK(v <= 9);
        lo_seen = std::min(lo_seen, v);
        hi_seen = std::max(hi_seen, v);
    }
    CHECK(lo_seen == 3);
    CHECK(hi_seen == 9);
}

TEST_CASE("matmul against naive loops") {
    Rng rng(5);
    Tensor a({3, 4}), b({4, 2});
    for (std::int64_t i = 0; i < a.size(); ++i) a[i] = rng.normal();
    for (std::int64_t i = 0; i < b.size(); ++i) b[i] = rng.normal();
    Tensor c = matmul(constant(a), constant(b))->value;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) acc += a[i * 4 + k] * b[k * 2 + j];
            CHECK(c[i * 2 + j] == doctest::Approx(acc).epsilon(1e-12));
        }
}

TEST_CASE("elementwise and reduction gradients vs finite differences") {
    Rng rng(11);
    Tensor x({3, 4});
    for (std::int64_t i = 0; i < x.size(); ++i) x[i] = 0.5 + 0.3 * rng.normal();

    check_gradients([](const NodePtr& v) { return sum_all(mul(v, v)); }, x);
    check_gradients([](const NodePtr& v) { return mean_all(tanh_op(v)); }, x);
    check_gradients([](const NodePtr& v) { return sum_all(sqrt_op(mul(v, v))); }, x);
    check_gradients([](const NodePtr& v) { return sum_all(log_op(add_scalar(mul(v, v), 1.0))); }, x);
    check_gradients([](const NodePtr& v) { return mul_scalar(sum_all(v), 3.0); }, x);
    check_gradients(
        [](const NodePtr& v) {
            NodePtr m = mean_over_rows(v);
            NodePtr c = sub_row_broadcast(v, m);
            return mean_all(mul(c, c));
        },
        x);
    check_gradients([](const NodePtr& v) { return sum_all(mul(mean_over_cols(v), mean_over_cols(v))); },
                    x);
}

TEST_CASE("softmax rows: stochastic output and gradient") {
    Rng rng(13);
    Tensor x({5, 7});
    for (std::int64_t i = 0; i < x.size(); ++i) x[i] = rng.normal();
    Tensor y = softmax_rows(constant(x))->value;
    for (int r = 0; r < 5; ++r) {
        double sum = 0.0;
        for (int c = 0; c < 7; ++c) {
            CHECK(y[r * 7 + c] >= 0.0);
            sum += y[r * 7 + c];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    // weighted scalar head so every map entry matters
    Tensor w({5, 7});
    for (std::int64_t i = 0; i < w.size(); ++i) w[i] = rng.normal();
    check_gradients([&](const NodePtr& v) { return sum_all(mul(softmax_rows(v), constant(w))); }, x,
                    1e-5);
}

TEST_CASE("matmul family gradients") {
    Rng rng(17);
    Tensor x({4, 3});
    for (std::int64_t i = 0; i < x.size(); ++i) x[i] = rng.normal();
    Tensor other({3, 5});
    for (std::int64_t i = 0; i < other.size(); ++i) other[i] = rng.normal();
    Tensor other_nt({6, 3});
    for (std::int64_t i = 0; i < other_nt.size(); ++i) other_nt[i] = rng.normal();
    Tensor bias({5});
    for (std::int64_t i = 0; i < bias.size(); ++i) bias[i] = rng.normal();

    check_gradients([&](const NodePtr& v) { return sum_all(mul(matmul(v, constant(other)),
                                                               matmul(v, constant(other)))); },
                    x, 1e-5);
    check_gradients([&](const NodePtr& v) { return sum_all(mul(matmul_nt(v, constant(other_nt)),
                                                               matmul_nt(v, constant(other_nt)))); },
                    x, 1e-5);
    check_gradients(
        [&](const NodePtr& v) {
            NodePtr y = linear(v, constant(other), constant(bias));
            return sum_all(mul(y, y));
        },
        x, 1e-5);
    // gradient w.r.t. the weight side
    check_gradients(
        [&](const NodePtr& v) {
            NodePtr y = matmul(constant(x), reshape(v, {3, 5}));
            return sum_all(mul(y, y));
        },
        Tensor::from({15}, std::vector<double>(other.data(), other.data() + 15)), 1e-5);
}

TEST_CASE("spatial op gradients") {
    Rng rng(19);
    Tensor x({2, 4, 4});
    for (std::int64_t i = 0; i < x.size(); ++i) x[i] = rng.normal();
    Tensor w({3, 2, 3, 3});
    for (std::int64_t i = 0; i < w.size(); ++i) w[i] = 0.3 * rng.normal();
    Tensor b({3});
    for (std::int64_t i = 0; i < b.size(); ++i) b[i] = 0.1 * rng.normal();

    check_gradients(
        [&](const NodePtr& v) {
            NodePtr y = conv3x3(v, constant(w), constant(b));
            return sum_all(mul(y, y));
        },
        x, 1e-5);
    check_gradients(
        [&](const NodePtr& v) {
            NodePtr y = conv3x3(constant(x), reshape(v, {3, 2, 3, 3}), constant(b));
            return sum_all(mul(y, y));
        },
        Tensor::from({54}, std::vector<double>(w.data(), w.data() + 54)), 1e-5);
    check_gradients([&](const NodePtr& v) { return sum_all(mul(avg_pool2(v), avg_pool2(v))); }, x);
    check_gradients(
        [&](const NodePtr& v) { return sum_all(mul(upsample_nearest2(v), upsample_nearest2(v))); },
        x);
    check_gradients(
        [&](const NodePtr& v) {
            NodePtr y = add_channel_bias(v, constant(b.reshaped({3})));
            return sum_all(mul(y, y));
        },
        Tensor({3, 4, 4}, 0.4));
    check_gradients(
        [&](const NodePtr& v) {
            NodePtr y = concat_channels(v, constant(x));
            return sum_all(mul(y, y));
        },
        x);
}

TEST_CASE("conv3x3 matches naive padding-aware loops") {
    Rng rng(23);
    Tensor x({2, 5, 6});
    for (std::int64_t i = 0; i < x.size(); ++i) x[i] = rng.normal();
    Tensor w({3, 2, 3, 3});
    for (std::int64_t i = 0; i < w.size(); ++i) w[i] = rng.normal();
    Tensor b({3});
    for (std::int64_t i = 0; i < b.size(); ++i) b[i] = rng.normal();
    Tensor y = conv3x3(constant(x), constant(w), constant(b))->value;
    for (int o = 0; o < 3; ++o)
        for (int py = 0; py < 5; ++py)
            for (int px = 0; px < 6; ++px) {
                double acc = b[o];
                for (int c = 0; c < 2; ++c)
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            const int iy = py + ky - 1, ix = px + kx - 1;
                            if (iy < 0 || iy >= 5 || ix < 0 || ix >= 6) continue;
                            acc += w[((o * 2 + c) * 3 + ky) * 3 + kx] * x[(c * 5 + iy) * 6 + ix];
                        }
                CHECK(y[(o * 5 + py) * 6 + px] == doctest::Approx(acc).epsilon(1e-12));
            }
}

TEST_CASE("gather and framing gradients") {
    Rng rng(29);
    Tensor x({6, 3});
    for (std::int64_t i = 0; i < x.size(); ++i) x[i] = rng.normal();
    check_gradients(
        [&](const NodePtr& v) {
            NodePtr g = gather_rows(v, {0, 2, 2, 5});
            return sum_all(mul(g, g));
        },
        x);
    Tensor sig({10});
    for (std::int64_t i = 0; i < sig.size(); ++i) sig[i] = rng.normal();
    check_gradients(
        [&](const NodePtr& v) {
            NodePtr f = frame_signal(v, 4, 3); // pads two zeros
            return sum_all(mul(f, f));
        },
        sig);
}

TEST_CASE("parallel_for covers every index once") {
    std::vector<int> hits(100, 0);
    parallel_for(100, [&](int i) { hits[i] += 1; }, 4);
    for (int h : hits) CHECK(h == 1);
}
