#include "ggrnet/autodiff.hpp"
#include "ggrnet/util/parallel.hpp"
#include "ggrnet/util/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>

using namespace ggrnet;
using namespace ggrnet::ad;

using Mat = Matrix<double>;
using Fn = std::function<Variable(Graph&, const std::vector<Variable>&)>;

namespace {

Mat random_mat(Rng& rng, Index r, Index c, double scale = 1.0) {
  Mat m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
  return m;
}

/// Scalar probe sum(fn(inputs) .* weights), evaluated on a fresh graph.
double probe(const Fn& fn, const std::vector<Mat>& inputs, const Mat& weights) {
  Graph g;
  std::vector<Variable> vars;
  for (const auto& m : inputs) vars.push_back(g.constant(m));
  return (fn(g, vars).value().array() * weights.array()).sum();
}

/// Compares backprop against central differences of a random linear probe.
void check_gradients(const Fn& fn, std::vector<Mat> inputs, std::uint64_t seed = 1, double tol = 1e-7) {
  Rng rng(seed);
  Graph g;
  std::vector<Variable> vars;
  for (const auto& m : inputs) vars.push_back(g.variable(m));
  const Variable out = fn(g, vars);
  const Mat weights = random_mat(rng, out.rows(), out.cols());
  g.backward(sum(hadamard(out, g.constant(weights))));

  const double h = 1e-6;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Mat analytic = vars[k].grad();
    for (Index i = 0; i < inputs[k].size(); ++i) {
      const double saved = inputs[k].data()[i];
      inputs[k].data()[i] = saved + h;
      const double up = probe(fn, inputs, weights);
      inputs[k].data()[i] = saved - h;
      const double down = probe(fn, inputs, weights);
      inputs[k].data()[i] = saved;
      const double numeric = (up - down) / (2 * h);
      CHECK(std::abs(analytic.data()[i] - numeric) <= tol * std::max(1.0, std::abs(numeric)));
    }
  }
}

}  // namespace

TEST_CASE("tensor allocates a gradient only when required") {
  const Tensor<double> a(Mat::Ones(2, 3), true);
  CHECK(a.grad.rows() == 2);
  CHECK(a.grad.cols() == 3);
  CHECK(a.grad.isZero());
  const Tensor<double> b(Mat::Ones(2, 3), false);
  CHECK(b.grad.size() == 0);
  CHECK(shape_string(2, 3) == "2x3");
}

TEST_CASE("op values match their definitions") {
  Graph g;
  Mat a(2, 2);
  a << 1, -2, 3, 4;
  Mat b(2, 2);
  b << 0.5, 1, -1, 2;
  const auto va = g.constant(a);
  const auto vb = g.constant(b);
  CHECK(matmul(va, vb).value().isApprox(a * b));
  CHECK(matmul_nt(va, vb).value().isApprox(a * b.transpose()));
  CHECK(transpose(va).value() == a.transpose());
  CHECK((va + vb).value() == a + b);
  CHECK((va - vb).value() == a - b);
  CHECK((2.0 * va).value() == 2.0 * a);
  CHECK(hadamard(va, vb).value() == a.cwiseProduct(b));
  CHECK(relu(va).value() == a.cwiseMax(0.0));
  CHECK(tanh(va).value().isApprox(a.array().tanh().matrix()));
  CHECK(sum(va).item() == doctest::Approx(6.0));
  CHECK(mean_rows(va).value().isApprox((Mat(1, 2) << 2.0, 1.0).finished()));
  CHECK(slice_cols(va, 1, 1).value() == a.col(1));
  CHECK(slice_rows(va, 1, 1).value() == a.row(1));
  const Mat s = sigmoid(va).value();
  for (Index i = 0; i < a.size(); ++i) CHECK(s.data()[i] == doctest::Approx(1.0 / (1.0 + std::exp(-a.data()[i]))));

  const auto row = g.constant((Mat(1, 2) << 10, 20).finished());
  CHECK(add_row_broadcast(va, row).value() == (Mat(2, 2) << 11, 18, 13, 24).finished());
  const auto gathered = gather_rows(va, {1, 1, 0});
  CHECK(gathered.value() == (Mat(3, 2) << 3, 4, 3, 4, 1, -2).finished());
  const auto scattered = scatter_add_rows(gathered, {0, 0, 1}, 3);
  CHECK(scattered.value() == (Mat(3, 2) << 6, 8, 1, -2, 0, 0).finished());

  const auto x = g.constant((Mat(2, 1) << 1, 2).finished());
  const auto bias = g.constant((Mat(2, 1) << 0.5, -0.5).finished());
  CHECK(linear(va, bias, x).value() == (Mat(2, 1) << -2.5, 10.5).finished());
  CHECK(concat({x, bias}).value() == (Mat(4, 1) << 1, 2, 0.5, -0.5).finished());
}

TEST_CASE("sigmoid stays finite and accurate at extreme inputs") {
  CHECK(stable_sigmoid(800.0) == 1.0);
  CHECK(stable_sigmoid(-800.0) == 0.0);
  CHECK(stable_sigmoid(-30.0) == doctest::Approx(std::exp(-30.0)).epsilon(1e-12));
  Graph g;
  const auto v = g.variable((Mat(1, 2) << -800, 800).finished());
  const auto s = sigmoid(v);
  g.backward(sum(s));
  CHECK(v.grad().allFinite());
}

TEST_CASE("gradients of every op match central differences") {
  Rng rng(11);
  const Mat A = random_mat(rng, 3, 4), B = random_mat(rng, 4, 2), C = random_mat(rng, 3, 4);
  const Mat col = random_mat(rng, 4, 1), bias = random_mat(rng, 3, 1), row = random_mat(rng, 1, 4);

  SUBCASE("linear") {
    check_gradients([](Graph&, const auto& v) { return linear(v[0], v[1], v[2]); }, {A, bias, col});
  }
  SUBCASE("concat") {
    check_gradients([](Graph&, const auto& v) { return concat({v[0], v[1], v[0]}); }, {col, bias});
  }
  SUBCASE("slices") {
    check_gradients([](Graph&, const auto& v) { return slice_rows(slice_cols(v[0], 1, 2), 1, 2); }, {A});
  }
  SUBCASE("matmul") {
    check_gradients([](Graph&, const auto& v) { return matmul(v[0], v[1]); }, {A, B});
  }
  SUBCASE("matmul_nt") {
    check_gradients([](Graph&, const auto& v) { return matmul_nt(v[0], v[1]); }, {A, C});
  }
  SUBCASE("transpose, add, sub, scale") {
    check_gradients([](Graph&, const auto& v) { return transpose(v[0] + 3.0 * v[1] - v[0]); }, {A, C});
  }
  SUBCASE("hadamard") {
    check_gradients([](Graph&, const auto& v) { return hadamard(v[0], v[1]); }, {A, C});
  }
  SUBCASE("sigmoid, tanh, relu") {
    check_gradients([](Graph&, const auto& v) { return hadamard(sigmoid(v[0]), tanh(v[0])); }, {A});
    // Keep relu inputs away from the kink.
    Mat away = A;
    for (Index i = 0; i < away.size(); ++i) away.data()[i] += away.data()[i] >= 0 ? 0.1 : -0.1;
    check_gradients([](Graph&, const auto& v) { return relu(v[0]); }, {away});
  }
  SUBCASE("add_row_broadcast") {
    check_gradients([](Graph&, const auto& v) { return add_row_broadcast(v[0], v[1]); }, {A, row});
  }
  SUBCASE("gather and scatter") {
    check_gradients([](Graph&, const auto& v) { return scatter_add_rows(gather_rows(v[0], {2, 0, 2, 1}), {1, 1, 0, 3}, 4); },
                    {A});
  }
  SUBCASE("mean_rows and sum") {
    check_gradients([](Graph&, const auto& v) { return sum(mean_rows(hadamard(v[0], v[0]))); }, {A});
  }
}

TEST_CASE("a variable used twice accumulates both paths") {
  Graph g;
  const auto x = g.variable((Mat(1, 1) << 3.0).finished());
  g.backward(hadamard(x, x) + x);
  CHECK(x.grad()(0, 0) == 7.0);
  g.zero_grad();
  CHECK(x.grad()(0, 0) == 0.0);
}

TEST_CASE("constants receive no gradient and block nothing") {
  Graph g;
  const auto c = g.constant(Mat::Ones(2, 1));
  const auto x = g.variable(Mat::Ones(2, 1));
  const auto y = sum(hadamard(c, x));
  CHECK_FALSE(c.requires_grad());
  CHECK(y.requires_grad());
  g.backward(y);
  CHECK(x.grad() == Mat::Ones(2, 1));
  CHECK_THROWS_AS(c.grad(), std::logic_error);
}

TEST_CASE("shape errors are reported") {
  Graph g;
  const auto a = g.constant(Mat::Ones(2, 3));
  const auto b = g.constant(Mat::Ones(3, 2));
  const auto col = g.constant(Mat::Ones(3, 1));
  CHECK_THROWS_AS(a + b, DimensionError);
  CHECK_THROWS_AS(hadamard(a, b), DimensionError);
  CHECK_THROWS_AS(matmul(a, a), DimensionError);
  CHECK_THROWS_AS(linear(a, col, col), DimensionError);
  CHECK_THROWS_AS(concat({a, col}), DimensionError);
  CHECK_THROWS_AS(gather_rows(a, {2}), DimensionError);
  CHECK_THROWS_AS(scatter_add_rows(a, {0}, 2), DimensionError);
  CHECK_THROWS_AS(slice_cols(a, 2, 2), DimensionError);
  CHECK_THROWS_AS(add_row_broadcast(a, col), DimensionError);
  CHECK_THROWS_AS(g.backward(a), DimensionError);
  CHECK_THROWS_AS(a.item(), DimensionError);
}

TEST_CASE("operands from different graphs are rejected") {
  Graph g1, g2;
  const auto a = g1.constant(Mat::Ones(1, 1));
  const auto b = g2.constant(Mat::Ones(1, 1));
  CHECK_THROWS_AS(a + b, std::invalid_argument);
}

TEST_CASE("non-finite values abort with the op name") {
  Graph g;
  Mat nan = Mat::Ones(1, 1);
  nan(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(g.constant(nan), NumericalError);
  const auto big = g.variable((Mat(1, 1) << 1e300).finished());
  try {
    (void)hadamard(big, big);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("hadamard") != std::string::npos);
  }
}

TEST_CASE("empty row sets pass through gather and scatter") {
  Graph g;
  const auto x = g.variable(Mat::Ones(1, 3));
  const auto none = gather_rows(x, {});
  CHECK(none.rows() == 0);
  const auto back = scatter_add_rows(none, {}, 1);
  CHECK(back.value().isZero());
  g.backward(sum(back));
  CHECK(x.grad().isZero());
}

TEST_CASE("fault hook perturbs exactly the targeted op") {
  auto grad_of = [] {
    Graph g;
    const auto x = g.variable((Mat(1, 1) << 0.3).finished());
    g.backward(sum(tanh(x)));
    return x.grad()(0, 0);
  };
  const double clean = grad_of();
  testing::inject_backward_fault(Op::tanh);
  const double faulty = grad_of();
  testing::inject_backward_fault(Op::relu);
  const double other = grad_of();
  testing::clear_backward_fault();
  CHECK(faulty == doctest::Approx(clean * 1.01));
  CHECK(other == clean);
  CHECK(grad_of() == clean);
}

TEST_CASE("graph is generic over the scalar type") {
  BasicGraph<float> g;
  const auto w = g.variable(Matrix<float>::Constant(1, 2, 0.5f));
  const auto b = g.variable(Matrix<float>::Zero(1, 1));
  const auto x = g.constant((Matrix<float>(2, 1) << 1.0f, 2.0f).finished());
  const auto y = linear(w, b, x);
  g.backward(y);
  CHECK(y.item() == doctest::Approx(1.5f));
  CHECK(w.grad()(0, 1) == 2.0f);
}

TEST_CASE("global norm clipping") {
  Tensor<double> a(Mat::Zero(1, 2), true), b(Mat::Zero(2, 1), true);
  a.grad << 3, 0;
  b.grad << 0, 4;
  std::array<Tensor<double>*, 2> ps = {&a, &b};
  const std::span<Tensor<double>* const> view(ps);
  CHECK(global_grad_norm(view) == 5.0);

  SUBCASE("below the threshold nothing changes") {
    CHECK(clip_global_norm(view, 10.0) == 5.0);
    CHECK(a.grad(0, 0) == 3.0);
  }
  SUBCASE("above the threshold the direction is kept") {
    CHECK(clip_global_norm(view, 1.0) == 5.0);
    CHECK(global_grad_norm(view) == doctest::Approx(1.0));
    CHECK(a.grad(0, 0) == doctest::Approx(0.6));
    CHECK(b.grad(1, 0) == doctest::Approx(0.8));
  }
  SUBCASE("sgd step") {
    sgd_step(view, 0.5);
    CHECK(a.value(0, 0) == -1.5);
    CHECK(b.value(1, 0) == -2.0);
  }
  CHECK_THROWS_AS(clip_global_norm(view, 0.0), std::invalid_argument);
}

TEST_CASE("rng is deterministic and in range") {
  Rng a(42), b(42), c(43);
  std::vector<double> xa, xb, xc;
  for (int i = 0; i < 100; ++i) {
    xa.push_back(a.uniform());
    xb.push_back(b.uniform());
    xc.push_back(c.uniform());
  }
  CHECK(xa == xb);
  CHECK(xa != xc);
  for (const double x : xa) CHECK((x >= 0.0 && x < 1.0));
  Rng r(5);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = r.below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
  std::vector<int> items(20);
  std::iota(items.begin(), items.end(), 0);
  r.shuffle(std::span<int>(items));
  std::vector<int> sorted = items;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 20; ++i) CHECK(sorted[i] == i);
  CHECK(derive_seed(1, seed_stream::init) != derive_seed(1, seed_stream::shuffle));
}

TEST_CASE("parallel_for fills slots independently of thread count") {
  for (const std::size_t threads : {1u, 2u, 5u}) {
    std::vector<std::size_t> out(17, 0);
    parallel_for(out.size(), threads, [&](std::size_t i) { out[i] = i * i; });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == i * i);
  }
  CHECK_THROWS_AS(parallel_for(8, 3,
                               [](std::size_t i) {
                                 if (i == 5) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}
