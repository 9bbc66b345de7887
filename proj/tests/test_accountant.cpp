// Copyright 2026 The fldp Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fldp/accountant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "fldp/errors.hpp"
#include "test_util.hpp"

using namespace fldp;
using fldp::testing::rel_err;

namespace {

// A_alpha - 1 by direct quadrature of
//   E_{x ~ N(0, z^2)} [((1 - q) + q exp((2x - 1) / (2 z^2)))^alpha] - 1.
// Subtracting 1 inside the integrand keeps precision when A is close to 1.
double integrated_a_minus_one(double z, double q, double alpha) {
  const double pi = 3.14159265358979323846;
  auto f = [&](double x) {
    const double density = std::exp(-x * x / (2 * z * z)) / (z * std::sqrt(2 * pi));
    const double ratio_minus_one = std::expm1((2 * x - 1) / (2 * z * z));
    return density * std::expm1(alpha * std::log1p(q * ratio_minus_one));
  };
  // The integrand is negligible beyond a few dozen standard deviations
  // of either Gaussian, shifted by the order for large alpha.
  const double lo = -40 * z;
  const double hi = 40 * z + alpha + 1;
  double err = 0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 20, 1e-14, &err);
}

}  // namespace

TEST_CASE("numerical integration oracle matches the series expansion") {
  struct Triple { double z, q, alpha; };
  // One integer order, two fractional orders.
  for (Triple t : {Triple{2.048, 0.0295, 9.0}, Triple{1.0, 0.1, 2.5}, Triple{0.8, 0.01, 1.5}}) {
    CAPTURE(t.z);
    CAPTURE(t.alpha);
    const double expected = std::log1p(integrated_a_minus_one(t.z, t.q, t.alpha)) / (t.alpha - 1);
    const double actual = log_a(t.z, t.q, t.alpha) / (t.alpha - 1);
    CHECK(rel_err(actual, expected) < 1e-6);
  }
}

TEST_CASE("integer and fractional paths agree near integer orders") {
  for (double z : {0.7, 1.5, 4.0}) {
    const double at_int = log_a(z, 0.05, 5.0);
    const double near = log_a(z, 0.05, 5.0 + 1e-9);
    CHECK(rel_err(near, at_int) < 1e-6);
  }
}

TEST_CASE("full batch reduces to the Gaussian mechanism") {
  const std::vector<double> orders{2.0};
  const auto curve = rdp_sampled_gaussian(1.0, 1.0, orders);
  CHECK(curve.eps_per_step[0] == doctest::Approx(1.0).epsilon(1e-15));
  const std::vector<double> more{1.5, 3.0, 10.0};
  const auto c2 = rdp_sampled_gaussian(2.0, 1.0, more);
  for (std::size_t i = 0; i < more.size(); ++i)
    CHECK(c2.eps_per_step[i] == doctest::Approx(more[i] / 8.0).epsilon(1e-14));
}

TEST_CASE("epsilon per order vanishes monotonically as q goes to zero") {
  const auto orders = default_orders();
  double prev_sum = std::numeric_limits<double>::infinity();
  for (double q : {0.5, 0.1, 0.01, 1e-3, 1e-4, 1e-6}) {
    const auto curve = rdp_sampled_gaussian(4.0, q, orders);
    double sum = 0;
    for (double e : curve.eps_per_step) sum += e;
    CHECK(sum < prev_sum);
    prev_sum = sum;
  }
  CHECK(prev_sum < 1e-6);
}

TEST_CASE("orders at or below one are rejected") {
  const std::vector<double> bad{1.0, 2.0};
  CHECK_THROWS_AS(rdp_sampled_gaussian(1.0, 0.1, bad), DomainError);
  const std::vector<double> worse{0.5};
  CHECK_THROWS_AS(rdp_sampled_gaussian(1.0, 0.1, worse), DomainError);
}

TEST_CASE("per-step RDP is monotone in q, alpha and z") {
  const auto orders = default_orders();
  for (double z : {0.5, 1.0, 2.0}) {
    for (double q : {0.001, 0.01, 0.1}) {
      const auto c = rdp_sampled_gaussian(z, q, orders);
      const auto c_q = rdp_sampled_gaussian(z, q * 2, orders);
      const auto c_z = rdp_sampled_gaussian(z * 1.5, q, orders);
      for (std::size_t i = 0; i < orders.size(); ++i) {
        CAPTURE(orders[i]);
        CHECK(c.eps_per_step[i] >= 0.0);
        CHECK(std::isfinite(c.eps_per_step[i]));
        CHECK(c_q.eps_per_step[i] >= c.eps_per_step[i]);
        CHECK(c_z.eps_per_step[i] <= c.eps_per_step[i]);
        if (i > 0) CHECK(c.eps_per_step[i] >= c.eps_per_step[i - 1] * (1 - 1e-12));
      }
    }
  }
}

TEST_CASE("composition is linear") {
  const auto orders = default_orders();
  const auto base = rdp_sampled_gaussian(1.2, 0.02, orders);
  const auto zero = compose(base, 0);
  const auto one = compose(base, 1);
  const auto a = compose(base, 300);
  const auto b = compose(base, 700);
  const auto ab = compose(base, 1000);
  for (std::size_t i = 0; i < orders.size(); ++i) {
    CHECK(zero.total(i) == 0.0);
    CHECK(one.total(i) == base.total(i));
    CHECK(rel_err(a.total(i) + b.total(i), ab.total(i)) < 1e-12);
  }
}

TEST_CASE("reference epsilon values") {
  struct Row { double z, q; std::int64_t t; double eps, order; };
  const std::vector<Row> rows{{1.536, 0.0295, 2006, 6.5, 7.0},
                              {0.6144, 0.00295, 2034, 7.2, 3.0},
                              {2.048, 0.0295, 2006, 4.5, 9.0}};
  const auto orders = default_orders();
  for (const auto& r : rows) {
    CAPTURE(r.z);
    const auto res = compute_epsilon(r.z, r.q, r.t, 1e-9, orders);
    CHECK(rel_err(res.epsilon, r.eps) <= 0.05);
    // Within one grid point of the printed order.
    const auto it = std::find(orders.begin(), orders.end(), r.order);
    REQUIRE(it != orders.end());
    const auto idx = static_cast<long>(it - orders.begin());
    const auto got = static_cast<long>(std::find(orders.begin(), orders.end(), res.best_order) - orders.begin());
    CHECK(std::abs(got - idx) <= 1);
  }
}

TEST_CASE("improved conversion never exceeds the classic one") {
  const auto orders = default_orders();
  for (double z : {0.6, 1.0, 2.0}) {
    const auto c = compose(rdp_sampled_gaussian(z, 0.01, orders), 1000);
    CHECK(epsilon_at_delta(c, 1e-9, Conversion::kImproved).epsilon <=
          epsilon_at_delta(c, 1e-9, Conversion::kClassic).epsilon);
  }
}

TEST_CASE("epsilon edge cases") {
  const auto orders = default_orders();
  CHECK(compute_epsilon(1.0, 0.01, 0, 1e-9, orders).epsilon == 0.0);
  CHECK(std::isinf(compute_epsilon(0.0, 0.01, 100, 1e-9, orders).epsilon));
  // Huge noise: only the conversion term is left, minimized at the largest order.
  const auto big = compute_epsilon(1e6, 0.01, 100, 1e-9, orders, Conversion::kClassic);
  CHECK(big.best_order == 256.0);
  CHECK(big.epsilon == doctest::Approx(std::log(1e9) / 255.0).epsilon(1e-6));
  RdpCurve empty;
  CHECK_THROWS_AS(epsilon_at_delta(empty, 1e-9), ConfigError);
  const auto c = rdp_sampled_gaussian(1.0, 0.1, orders);
  CHECK_THROWS_AS(epsilon_at_delta(c, 0.0), DomainError);
  CHECK_THROWS_AS(epsilon_at_delta(c, 1.0), DomainError);
}

TEST_CASE("converted epsilon is monotone in z and T") {
  const auto orders = default_orders();
  double prev = std::numeric_limits<double>::infinity();
  for (double z : {0.5, 0.8, 1.0, 1.5, 3.0, 10.0}) {
    const double e = compute_epsilon(z, 0.01, 500, 1e-6, orders).epsilon;
    CHECK(e <= prev);
    prev = e;
  }
  prev = 0;
  for (std::int64_t t : {1, 10, 100, 1000, 10000}) {
    const double e = compute_epsilon(1.0, 0.01, t, 1e-6, orders).epsilon;
    CHECK(e >= prev);
    prev = e;
  }
}

TEST_CASE("calibration inverts the accountant") {
  const auto orders = default_orders();
  const double eps = compute_epsilon(1.024, 0.0295, 2006, 1e-9, orders).epsilon;
  const double z = calibrate_noise(eps, 0.0295, 2006, 1e-9, 1e-6, orders);
  CHECK(rel_err(z, 1.024) < 0.01);

  const double z_tight = calibrate_noise(5.0, 0.0295, 2006, 1e-9, 1e-4, orders);
  const double z_loose = calibrate_noise(20.0, 0.0295, 2006, 1e-9, 1e-4, orders);
  CHECK(z_loose < z_tight);

  CHECK_THROWS_AS(calibrate_noise(std::numeric_limits<double>::infinity(), 0.01, 10, 1e-9, 1e-3, orders),
                  DomainError);
  try {
    calibrate_noise(1e-9, 0.5, 1000, 1e-9, 1e-3, orders, {0.1, 1.0});
    FAIL("expected CalibrationError");
  } catch (const CalibrationError& e) {
    CHECK(e.bracket().z_low == 0.1);
    CHECK(e.bracket().z_high == 1.0);
    CHECK(e.eps_at_high() > 1e-9);
  }
}

TEST_CASE("privacy report carries all parametrizations") {
  PrivacyParams p;
  p.clip_bound = 0.01;
  p.sigma = 3e-8;
  p.sigma_kind = NoiseKind::kAvg;
  p.sampling_rate = 0.00295;
  p.population = 69506000;
  p.cohort_size = 204800;
  p.steps = 2034;
  p.delta = 1e-9;
  const auto r = privacy_report(p, default_orders());
  CHECK(r.sigma_avg == 3e-8);
  CHECK(rel_err(r.sigma_client, 3e-8 * std::sqrt(204800.0)) < 1e-15);
  CHECK(rel_err(r.sigma_sum, 3e-8 * 204800.0) < 1e-15);
  CHECK(rel_err(r.noise_multiplier, 0.6144) < 1e-12);
  CHECK(rel_err(r.epsilon, 7.2) < 0.05);
  CHECK(r.dp_valid);
}
