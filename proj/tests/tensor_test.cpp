#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "hgan/rng.hpp"
#include "hgan/tensor.hpp"

using namespace hgan;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.values()) v = scale * rng.normal();
    return t;
}

}  // namespace

TEST(Elementwise, SigmoidOfZeroIsHalf) {
    Tensor z = Tensor::zeros({3, 4});
    Tensor s = sigmoid(z);
    for (double v : s.values()) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(Elementwise, LeakyReluSlope) {
    Tensor x = Tensor::from({-1.0, 0.0, 2.0}, {3});
    Tensor y = leaky_relu(x, 0.2);
    EXPECT_DOUBLE_EQ(y(0), -0.2);
    EXPECT_DOUBLE_EQ(y(1), 0.0);
    EXPECT_DOUBLE_EQ(y(2), 2.0);
}

TEST(Elementwise, AbsBackwardNegativeInput) {
    Tensor x = Tensor::from({-3.5}, {1});
    x.set_requires_grad(true);
    Tape tape;
    Tensor y = sum(abs(x));
    tape.backward(y);
    EXPECT_DOUBLE_EQ(x.grad()[0], -1.0);
}

TEST(Elementwise, ShapeMismatchThrows) {
    Tensor a = Tensor::zeros({2, 2});
    Tensor b = Tensor::zeros({2, 3});
    EXPECT_THROW(add(a, b), std::invalid_argument);
    EXPECT_THROW(mul(a, b), std::invalid_argument);
}

TEST(Elementwise, LogOfNonPositiveThrows) {
    Tensor a = Tensor::from({1.0, 0.0}, {2});
    EXPECT_THROW(log(a), std::domain_error);
    Tensor b = Tensor::from({-1.0}, {1});
    EXPECT_THROW(log(b), std::domain_error);
    // The guarded form clamps instead.
    EXPECT_NO_THROW(clamped_log(b));
}

TEST(Elementwise, ClipRange) {
    Tensor a = Tensor::from({-2.0, 0.3, 7.0}, {3});
    Tensor c = clip(a, 0.0, 1.0);
    EXPECT_DOUBLE_EQ(c(0), 0.0);
    EXPECT_DOUBLE_EQ(c(1), 0.3);
    EXPECT_DOUBLE_EQ(c(2), 1.0);
}

TEST(Matmul, IdentityIsNoop) {
    Rng rng(7);
    Tensor a = random_tensor({4, 4}, rng);
    Tensor eye = Tensor::zeros({4, 4});
    for (std::size_t i = 0; i < 4; ++i) eye.at(i, i) = 1.0;
    Tensor c = matmul(a, eye);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_DOUBLE_EQ(c.values()[i], a.values()[i]);
}

TEST(Matmul, HandComputedProduct) {
    Tensor a = Tensor::from({1, 2, 3, 4}, {2, 2});
    Tensor b = Tensor::from({5, 6}, {2, 1});
    Tensor c = matmul(a, b);
    EXPECT_DOUBLE_EQ(c(0, 0), 17.0);
    EXPECT_DOUBLE_EQ(c(1, 0), 39.0);
}

TEST(Matmul, InnerMismatchThrows) {
    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({4, 2});
    EXPECT_THROW(matmul(a, b), std::invalid_argument);
}

// d sum(A*B) / dA_{ij} = sum_j B_{j.} -> every row of dA equals the column
// sums of B.
TEST(Matmul, BackwardOfSumIsColumnSums) {
    Rng rng(11);
    Tensor a = random_tensor({3, 4}, rng);
    Tensor b = random_tensor({4, 5}, rng);
    a.set_requires_grad(true);
    Tape tape;
    Tensor loss = sum(matmul(a, b));
    tape.backward(loss);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            double colsum = 0.0;
            for (std::size_t l = 0; l < 5; ++l) colsum += b(j, l);
            EXPECT_NEAR(a.grad()[i * 4 + j], colsum, 1e-12);
        }
}

TEST(Reduce, SumOfZeros) {
    EXPECT_DOUBLE_EQ(sum(Tensor::zeros({5, 3})).value(), 0.0);
}

TEST(Reduce, MeanHandComputed) {
    Tensor x = Tensor::from({1, 2, 3, 4}, {4});
    EXPECT_DOUBLE_EQ(mean(x).value(), 2.5);
}

TEST(Reduce, MeanBackwardDistributesOneOverN) {
    Tensor x = Tensor::from({1, 2, 3, 4}, {4});
    x.set_requires_grad(true);
    Tape tape;
    tape.backward(mean(x));
    for (double g : x.grad()) EXPECT_DOUBLE_EQ(g, 0.25);
}

TEST(Reduce, AxisReduction) {
    Tensor x = Tensor::from({1, 2, 3, 4, 5, 6}, {2, 3});
    Tensor c0 = sum(x, 0);
    ASSERT_EQ(c0.shape(), (Shape{3}));
    EXPECT_DOUBLE_EQ(c0(0), 5.0);
    EXPECT_DOUBLE_EQ(c0(2), 9.0);
    Tensor m1 = mean(x, 1);
    ASSERT_EQ(m1.shape(), (Shape{2}));
    EXPECT_DOUBLE_EQ(m1(0), 2.0);
    EXPECT_DOUBLE_EQ(m1(1), 5.0);
    EXPECT_THROW(sum(x, 2), std::invalid_argument);
}

TEST(Backward, ConstantLossWritesNoGrads) {
    Tensor w = Tensor::zeros({3});
    w.set_requires_grad(true);
    Tape tape;
    Tensor loss = Tensor::scalar(4.0);
    tape.backward(loss);
    for (double g : w.grad()) EXPECT_DOUBLE_EQ(g, 0.0);
}

TEST(Backward, SumGradIsOnes) {
    Tensor w = Tensor::from({0.5, -1.5, 2.0}, {3});
    w.set_requires_grad(true);
    Tape tape;
    tape.backward(sum(w));
    for (double g : w.grad()) EXPECT_DOUBLE_EQ(g, 1.0);
}

TEST(Backward, SigmoidAtZeroGradIsQuarter) {
    Tensor w = Tensor::zeros({6});
    w.set_requires_grad(true);
    Tape tape;
    tape.backward(sum(sigmoid(w)));
    for (double g : w.grad()) EXPECT_DOUBLE_EQ(g, 0.25);
}

TEST(Backward, NonScalarLossThrows) {
    Tensor w = Tensor::zeros({2});
    w.set_requires_grad(true);
    Tape tape;
    Tensor y = add(w, 1.0);
    EXPECT_THROW(tape.backward(y), std::invalid_argument);
}

TEST(Backward, AccumulatesAcrossCallsUntilZeroed) {
    Tensor w = Tensor::from({1.0, 2.0}, {2});
    w.set_requires_grad(true);
    Tape tape;
    Tensor loss = sum(mul(w, w));
    tape.backward(loss);
    std::vector<double> once = w.grad();
    tape.backward(loss);
    for (std::size_t i = 0; i < once.size(); ++i)
        EXPECT_DOUBLE_EQ(w.grad()[i], 2.0 * once[i]);
    w.zero_grad();
    tape.backward(loss);
    for (std::size_t i = 0; i < once.size(); ++i) EXPECT_DOUBLE_EQ(w.grad()[i], once[i]);
}

TEST(Backward, DetachedInputsStayConstant) {
    // A tensor produced under a different (or no) tape is a constant here.
    Tensor w = Tensor::from({2.0}, {1});
    w.set_requires_grad(true);
    Tensor frozen;
    {
        NoTapeGuard ng;
        frozen = mul(w, 3.0);
    }
    Tape tape;
    tape.backward(sum(mul(frozen, w)));
    EXPECT_DOUBLE_EQ(w.grad()[0], 6.0);  // only the direct factor, not the frozen path
}

TEST(GradientCheck, QuadraticIsNearlyExact) {
    Rng rng(3);
    Tensor x = random_tensor({10}, rng);
    double err = gradient_check([](const Tensor& t) { return sum(mul(t, t)); }, x);
    EXPECT_LT(err, 1e-6);
}

TEST(GradientCheck, ConstantFunctionIsZero) {
    Tensor x = Tensor::from({1.0, 2.0}, {2});
    double err = gradient_check([](const Tensor&) { return Tensor::scalar(3.0); }, x);
    EXPECT_DOUBLE_EQ(err, 0.0);
}

// Every differentiable primitive matches finite differences at random points
// kept away from relu/abs/clip kinks.
TEST(GradientCheck, PrimitiveBattery) {
    Rng rng(42);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor x = Tensor::zeros({8});
        for (double& v : x.values()) {
            do {
                v = rng.uniform(-2.0, 2.0);
            } while (std::abs(v) < 0.05);  // keep off kinks
        }
        Tensor other = random_tensor({8}, rng);
        Tensor row = random_tensor({1, 4}, rng);
        auto checks = {
            gradient_check([&](const Tensor& t) { return sum(add(t, other)); }, x),
            gradient_check([&](const Tensor& t) { return sum(sub(other, t)); }, x),
            gradient_check([&](const Tensor& t) { return mean(mul(t, other)); }, x),
            gradient_check([](const Tensor& t) { return sum(neg(t)); }, x),
            gradient_check([](const Tensor& t) { return sum(exp(t)); }, x),
            gradient_check([](const Tensor& t) { return sum(log(exp(t))); }, x),
            gradient_check([](const Tensor& t) { return sum(sigmoid(t)); }, x),
            gradient_check([](const Tensor& t) { return sum(tanh(t)); }, x),
            gradient_check([](const Tensor& t) { return sum(relu(t)); }, x),
            gradient_check([](const Tensor& t) { return sum(leaky_relu(t)); }, x),
            gradient_check([](const Tensor& t) { return sum(abs(t)); }, x),
            gradient_check([](const Tensor& t) { return sum(clip(t, -1.5, 1.5)); }, x),
            gradient_check([](const Tensor& t) { return mean(t); }, x),
        };
        for (double err : checks) EXPECT_LE(err, 1e-4);

        Tensor a = random_tensor({3, 4}, rng);
        Tensor b = random_tensor({4, 2}, rng);
        EXPECT_LE(gradient_check([&](const Tensor& t) { return sum(matmul(t, b)); }, a), 1e-4);
        EXPECT_LE(gradient_check([&](const Tensor& t) { return sum(matmul(a, t)); }, b), 1e-4);
        EXPECT_LE(gradient_check([&](const Tensor& t) { return sum(tile_rows(t, 5)); }, row), 1e-4);
        EXPECT_LE(gradient_check([&](const Tensor& t) { return sum(mul(sum(t, 1), sum(t, 1))); },
                                 a),
                  1e-4);
    }
}

TEST(GradientCheck, SoftmaxCrossEntropy) {
    Rng rng(5);
    Tensor logits = random_tensor({6, 4}, rng);
    std::vector<int> labels = {0, 3, 1, 2, 2, 0};
    double err = gradient_check(
        [&](const Tensor& t) { return softmax_xent(t, labels); }, logits);
    EXPECT_LE(err, 1e-4);
}

TEST(Forward, DeterministicAndFinite) {
    Rng rng(9);
    Tensor x = random_tensor({16, 8}, rng);
    Tensor y1 = sigmoid(matmul(x, random_tensor({8, 8}, rng)));
    EXPECT_TRUE(all_finite(y1));
    Tensor a = Tensor::from(x.values(), x.shape());
    Tensor b = Tensor::from(x.values(), x.shape());
    Tensor r1 = tanh(mul(a, a));
    Tensor r2 = tanh(mul(b, b));
    EXPECT_EQ(r1.values(), r2.values());
}

TEST(SoftmaxRows, RowsSumToOne) {
    Rng rng(13);
    Tensor logits = random_tensor({5, 7}, rng, 3.0);
    Tensor p = softmax_rows(logits);
    for (std::size_t i = 0; i < 5; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 7; ++j) s += p(i, j);
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}
