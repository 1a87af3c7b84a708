#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "fitkd/objectives.hpp"
#include "fitkd/rng.hpp"
#include "fitkd/tape.hpp"

#include "helpers.hpp"

using namespace fitkd;
using testing::fd_error;
using testing::random_distribution;
using testing::random_tensor;

TEST_CASE("divergence names round-trip") {
    for (DivergenceKind kind : kAllDivergences) {
        CHECK(divergence_from_name(divergence_name(kind)) == kind);
    }
    CHECK_THROWS_AS(divergence_from_name("kl"), std::invalid_argument);
}

TEST_CASE("divergence closed-form values") {
    const std::vector<double> p01 = {1.0, 0.0};
    const std::vector<double> p10 = {0.0, 1.0};
    CHECK(divergence(DivergenceKind::TVD, p01, p10) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(divergence(DivergenceKind::JS, p01, p10) ==
          doctest::Approx(0.6931471805599453).epsilon(1e-12));

    CHECK(divergence(DivergenceKind::FKL, {0.9, 0.1}, {0.6, 0.4}) ==
          doctest::Approx(0.22628916118535889).epsilon(1e-12));

    Rng rng(3);
    for (DivergenceKind kind : kAllDivergences) {
        auto p = random_distribution(rng, 9);
        CHECK(divergence(kind, p, p) < 1e-10);
    }
}

TEST_CASE("divergence rejects malformed distributions") {
    CHECK_THROWS_WITH_AS(divergence(DivergenceKind::FKL, {1.0}, {0.5, 0.5}),
                         doctest::Contains("length"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(divergence(DivergenceKind::JS, {1.5, -0.5}, {0.5, 0.5}),
                         doctest::Contains("negative"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(divergence(DivergenceKind::TVD, {0.5, 0.6}, {0.5, 0.5}),
                         doctest::Contains("sums"), std::invalid_argument);
}

TEST_CASE("divergence family properties hold on 10^4 random pairs") {
    Rng rng(424242);
    const double ln2 = std::log(2.0);
    bool fkl_asymmetry_seen = false;
    for (int trial = 0; trial < 10000; ++trial) {
        const int n = rng.uniform_int(2, 64);
        auto p = random_distribution(rng, n);
        auto q = random_distribution(rng, n);

        const double fkl_pq = divergence(DivergenceKind::FKL, p, q);
        const double fkl_qp = divergence(DivergenceKind::FKL, q, p);
        const double js = divergence(DivergenceKind::JS, p, q);
        const double tvd = divergence(DivergenceKind::TVD, p, q);
        const double skl = divergence(DivergenceKind::SKL, p, q);

        CHECK(fkl_pq >= 0.0);
        CHECK(js >= 0.0);
        CHECK(tvd >= 0.0);
        CHECK(skl >= 0.0);
        CHECK(js <= ln2 + 1e-12);
        CHECK(tvd <= 1.0 + 1e-12);
        CHECK(std::fabs(js - divergence(DivergenceKind::JS, q, p)) <= 1e-12);
        CHECK(std::fabs(tvd - divergence(DivergenceKind::TVD, q, p)) <= 1e-12);
        CHECK(std::fabs(skl - divergence(DivergenceKind::SKL, q, p)) <= 1e-12);
        CHECK(std::fabs(skl - (fkl_pq + fkl_qp)) <= 1e-12);
        if (std::fabs(fkl_pq - fkl_qp) > 1e-3) fkl_asymmetry_seen = true;
    }
    CHECK(fkl_asymmetry_seen);
}

TEST_CASE("sft loss hits its closed-form anchors") {
    // Probability ~1 on the target via a large margin.
    {
        Tensor logits = Tensor::zeros({3, 5});
        std::vector<int> targets = {1, 4, 0};
        for (int i = 0; i < 3; ++i) logits.at(i, targets[static_cast<std::size_t>(i)]) = 40.0;
        ComputationTape tape;
        int loss = sft_loss_node(tape, tape.leaf(logits), targets, {1, 1, 1});
        CHECK(tape.value(loss).data[0] <= 1e-6);
    }
    // Uniform logits give ln V.
    {
        Tensor logits = Tensor::full({2, 17}, 0.37);
        ComputationTape tape;
        int loss = sft_loss_node(tape, tape.leaf(logits), {3, 9}, {1, 1});
        CHECK(tape.value(loss).data[0] == doctest::Approx(std::log(17.0)).epsilon(1e-12));
    }
    // Per-token losses ln 2 and ln 4 average to 1.5 ln 2.
    {
        Tensor logits({2, 2}, {0.0, 0.0, 0.0, std::log(3.0)});
        ComputationTape tape;
        int loss = sft_loss_node(tape, tape.leaf(logits), {0, 0}, {1, 1});
        CHECK(tape.value(loss).data[0] == doctest::Approx(1.0397207708399179).epsilon(1e-12));
    }
}

TEST_CASE("sft loss masking and validation") {
    Tensor logits = Tensor::zeros({3, 4});
    ComputationTape tape;
    int leaf = tape.leaf(logits);
    CHECK_THROWS_WITH_AS(sft_loss_node(tape, leaf, {0, 1, 2}, {0, 0, 0}),
                         doctest::Contains("masked"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(sft_loss_node(tape, leaf, {0, 1}, {1, 1}),
                         doctest::Contains("sft_loss"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(sft_loss_node(tape, leaf, {0, 1, 9}, {1, 1, 1}),
                         doctest::Contains("vocabulary"), std::invalid_argument);

    // Masked rows contribute nothing: value equals the single-row loss.
    int loss = sft_loss_node(tape, leaf, {2, 1, 3}, {0, 1, 0});
    CHECK(tape.value(loss).data[0] == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    auto grads = tape.backward(loss);
    const Tensor& g = grads[static_cast<std::size_t>(leaf)];
    for (int j = 0; j < 4; ++j) {
        CHECK(g.at(0, j) == 0.0);
        CHECK(g.at(2, j) == 0.0);
    }
}

TEST_CASE("sft loss gradient is softmax minus one-hot over the count") {
    Rng rng(91);
    Tensor logits = random_tensor(rng, {4, 6}, 2.0);
    std::vector<int> targets = {5, 0, 3, 2};
    std::vector<int> mask = {1, 1, 0, 1};
    ComputationTape tape;
    int leaf = tape.leaf(logits);
    int loss = sft_loss_node(tape, leaf, targets, mask);
    auto grads = tape.backward(loss);

    ComputationTape probe;
    const Tensor& probs = probe.value(probe.softmax(probe.constant(logits)));
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 6; ++j) {
            double expect = 0.0;
            if (mask[static_cast<std::size_t>(i)] != 0) {
                expect = (probs.at(i, j) - (targets[static_cast<std::size_t>(i)] == j)) / 3.0;
            }
            CHECK(grads[static_cast<std::size_t>(leaf)].at(i, j) ==
                  doctest::Approx(expect).epsilon(1e-12));
        }
    }

    CHECK(fd_error(logits, [&](ComputationTape& t, int x) {
              return sft_loss_node(t, x, targets, mask);
          }) < 1e-4);
}

TEST_CASE("kd loss vanishes when student equals teacher") {
    Rng rng(17);
    Tensor logits = random_tensor(rng, {5, 12}, 3.0);
    for (DivergenceKind kind : kAllDivergences) {
        ComputationTape tape;
        int teacher = tape.constant(logits);
        int student = tape.leaf(logits);
        int loss = kd_loss_node(tape, kind, teacher, student, {1, 1, 1, 1, 1});
        CHECK(tape.value(loss).data[0] < 1e-10);
    }
}

TEST_CASE("kd loss agrees with the divergence operation") {
    // Teacher uniform over two tokens; student softmax([ln 3, 0]) = [3/4, 1/4].
    Tensor teacher({1, 2}, {0.0, 0.0});
    Tensor student({1, 2}, {std::log(3.0), 0.0});
    ComputationTape tape;
    int loss = kd_loss_node(tape, DivergenceKind::FKL, tape.constant(teacher),
                            tape.leaf(student), {1});
    const double direct = divergence(DivergenceKind::FKL, {0.5, 0.5}, {0.75, 0.25});
    CHECK(tape.value(loss).data[0] == doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("kd loss sends no gradient to the teacher") {
    Rng rng(29);
    Tensor tl = random_tensor(rng, {3, 8});
    Tensor sl = random_tensor(rng, {3, 8});
    ComputationTape tape;
    int teacher = tape.leaf(tl);  // differentiable on purpose
    int student = tape.leaf(sl);
    int loss = kd_loss_node(tape, DivergenceKind::SKL, teacher, student, {1, 0, 1});
    auto grads = tape.backward(loss);
    for (double v : grads[static_cast<std::size_t>(teacher)].data) CHECK(v == 0.0);
    bool student_touched = false;
    for (double v : grads[static_cast<std::size_t>(student)].data) {
        if (v != 0.0) student_touched = true;
    }
    CHECK(student_touched);
}

TEST_CASE("kd loss gradients pass finite differences for all four kinds") {
    for (int seed = 0; seed < 25; ++seed) {
        Rng rng(500 + static_cast<std::uint64_t>(seed));
        Tensor teacher = random_tensor(rng, {2, 8}, 1.5);
        Tensor student = random_tensor(rng, {2, 8}, 1.5);
        std::vector<int> mask = {1, 1};
        CAPTURE(seed);
        for (DivergenceKind kind : kAllDivergences) {
            CAPTURE(divergence_name(kind));
            CHECK(fd_error(student, [&](ComputationTape& t, int x) {
                      return kd_loss_node(t, kind, t.constant(teacher), x, mask);
                  }) < 1e-4);
        }
    }
}

TEST_CASE("kd loss validates shapes and masks") {
    ComputationTape tape;
    int a = tape.constant(Tensor::zeros({2, 4}));
    int b = tape.leaf(Tensor::zeros({2, 5}));
    CHECK_THROWS_WITH_AS(kd_loss_node(tape, DivergenceKind::JS, a, b, {1, 1}),
                         doctest::Contains("kd_loss"), std::invalid_argument);
    int c = tape.leaf(Tensor::zeros({2, 4}));
    CHECK_THROWS_WITH_AS(kd_loss_node(tape, DivergenceKind::JS, a, c, {0, 0}),
                         doctest::Contains("masked"), std::invalid_argument);
}

TEST_CASE("explanation loss combines components with the given weights") {
    Rng rng(41);
    Tensor teacher = random_tensor(rng, {4, 10}, 2.0);
    Tensor student = random_tensor(rng, {4, 10}, 2.0);
    std::vector<int> targets = {1, 7, 3, 9};
    std::vector<int> mask = {1, 1, 1, 0};

    ComputationTape tape;
    int t = tape.constant(teacher);
    int s = tape.leaf(student);
    LossReport report;
    int combined = explanation_loss_node(tape, DivergenceKind::JS, t, s, targets, mask,
                                         {0.1, 0.9}, &report);
    CHECK(report.token_count == 3);
    CHECK(report.sft > 0.0);
    CHECK(report.kd > 0.0);
    CHECK(std::fabs(report.combined - (0.1 * report.sft + 0.9 * report.kd)) <= 1e-12);
    CHECK(tape.value(combined).data[0] == report.combined);
}

TEST_CASE("explanation loss with zero kd weight is exactly the sft loss") {
    Rng rng(43);
    Tensor student = random_tensor(rng, {3, 6}, 2.0);
    std::vector<int> targets = {0, 5, 2};
    std::vector<int> mask = {1, 0, 1};

    ComputationTape tape;
    int s = tape.leaf(student);
    LossReport report;
    int combined =
        explanation_loss_node(tape, DivergenceKind::FKL, -1, s, targets, mask, {1.0, 0.0}, &report);
    ComputationTape ref;
    int sft = sft_loss_node(ref, ref.leaf(student), targets, mask);
    CHECK(tape.value(combined).data[0] == ref.value(sft).data[0]);
    CHECK(report.kd == 0.0);

    // The gradient path is bitwise identical to the bare sft node too.
    auto g1 = tape.backward(combined);
    auto g2 = ref.backward(sft);
    CHECK(bitwise_equal(g1[static_cast<std::size_t>(s)], g2[0]));
}

TEST_CASE("explanation loss rejects degenerate weights") {
    ComputationTape tape;
    int s = tape.leaf(Tensor::zeros({1, 3}));
    CHECK_THROWS_AS(
        explanation_loss_node(tape, DivergenceKind::FKL, -1, s, {0}, {1}, {0.0, 0.0}, nullptr),
        std::invalid_argument);
    CHECK_THROWS_AS(
        explanation_loss_node(tape, DivergenceKind::FKL, -1, s, {0}, {1}, {-0.1, 0.5}, nullptr),
        std::invalid_argument);
}

TEST_CASE("classification loss anchors") {
    CHECK(classification_loss({0.0, 1.0, 0.0}, 1) < 1e-10);
    CHECK(classification_loss({1.0 / 3, 1.0 / 3, 1.0 / 3}, 0) ==
          doctest::Approx(1.0986122886681098).epsilon(1e-12));
    CHECK(classification_loss({0.7, 0.2, 0.1}, 1) ==
          doctest::Approx(1.6094379124341003).epsilon(1e-12));
    CHECK_THROWS_AS(classification_loss({0.7, 0.2}, 0), std::invalid_argument);
    CHECK_THROWS_AS(classification_loss({0.7, 0.2, 0.2}, 0), std::invalid_argument);
    CHECK_THROWS_AS(classification_loss({0.7, 0.2, 0.1}, 3), std::invalid_argument);
}

TEST_CASE("classification loss node differentiates through a softmax head") {
    Rng rng(53);
    Tensor logits = random_tensor(rng, {3}, 2.0);
    const int label = 2;
    ComputationTape tape;
    int x = tape.leaf(logits);
    int zhat = tape.softmax(x);
    int loss = classification_loss_node(tape, zhat, label);
    auto grads = tape.backward(loss);
    const Tensor& z = tape.value(zhat);
    for (int j = 0; j < 3; ++j) {
        const double expect = z.at(j) - (j == label ? 1.0 : 0.0);
        CHECK(grads[static_cast<std::size_t>(x)].at(j) ==
              doctest::Approx(expect).epsilon(1e-10));
    }
    CHECK(fd_error(logits, [&](ComputationTape& t, int leaf) {
              return classification_loss_node(t, t.softmax(leaf), label);
          }) < 1e-4);
}
