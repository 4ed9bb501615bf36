#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "ajl/errors.hpp"
#include "ajl/io.hpp"
#include "ajl/simgen.hpp"

using namespace ajl;

namespace {

LongitudinalDataset demo_data() {
  ScenarioConfig c = ScenarioConfig::preset("S1");
  c.n = 6;
  c.p = 4;
  c.s = 2;
  c.T = 9;
  c.n_test = 2;
  c.seed = 100;
  return generate(c).train;
}

}  // namespace

TEST_CASE("dataset CSV round trip is exact") {
  const LongitudinalDataset data = demo_data();
  const std::string csv = dataset_to_csv(data);
  const LongitudinalDataset back = dataset_from_csv_string(csv);

  REQUIRE(back.num_subjects() == data.num_subjects());
  CHECK(back.p == data.p);
  CHECK(back.K == data.K);
  for (int i = 0; i < data.num_subjects(); ++i) {
    CHECK(back.subjects[i].id == data.subjects[i].id);
    // precision 17 output makes the round trip bit-exact
    CHECK(back.subjects[i].times == data.subjects[i].times);
    CHECK(back.subjects[i].Y == data.subjects[i].Y);
    CHECK(back.subjects[i].X == data.subjects[i].X);
  }

  // A second serialization is byte-identical.
  CHECK(dataset_to_csv(back) == csv);
}

TEST_CASE("subjects keep first-appearance order") {
  const std::string csv =
      "subject,time,y1,x1\n"
      "zeta,0.0,1.0,0.5\n"
      "alpha,0.0,2.0,0.25\n"
      "zeta,0.5,1.5,0.5\n"
      "alpha,0.5,2.5,0.25\n";
  const LongitudinalDataset data = dataset_from_csv_string(csv);
  REQUIRE(data.num_subjects() == 2);
  CHECK(data.subjects[0].id == "zeta");
  CHECK(data.subjects[1].id == "alpha");
  CHECK(data.subjects[0].Y(1, 0) == 1.5);
}

TEST_CASE("time normalization maps the observed range onto [0, 1]") {
  const std::string csv =
      "subject,time,y1,x1\n"
      "a,10,1,0\n"
      "a,20,1,0\n"
      "a,30,1,0\n";
  const LongitudinalDataset data = dataset_from_csv_string(csv, true);
  CHECK(data.subjects[0].times[0] == 0.0);
  CHECK(data.subjects[0].times[1] == doctest::Approx(0.5));
  CHECK(data.subjects[0].times[2] == 1.0);
  CHECK(data.t_lo == 0.0);
  CHECK(data.t_hi == 1.0);

  const LongitudinalDataset raw = dataset_from_csv_string(csv, false);
  CHECK(raw.subjects[0].times[0] == 10.0);
  CHECK(raw.t_lo == 10.0);
  CHECK(raw.t_hi == 30.0);
}

TEST_CASE("malformed input is rejected with line numbers") {
  CHECK_THROWS_AS(dataset_from_csv_string(""), DataError);
  CHECK_THROWS_AS(dataset_from_csv_string("id,time,y1\na,0,1\n"), DataError);
  CHECK_THROWS_AS(dataset_from_csv_string("subject,time,x1\na,0,1\n"),
                  DataError);
  CHECK_THROWS_AS(
      dataset_from_csv_string("subject,time,y1,bogus\na,0,1,2\n"), DataError);

  const std::string short_row =
      "subject,time,y1,x1\na,0,1,2\na,0.5,1\n";
  CHECK_THROWS_WITH_AS(dataset_from_csv_string(short_row),
                       doctest::Contains("line 3"), DataError);

  const std::string bad_number =
      "subject,time,y1,x1\na,0,1,2\na,0.5,oops,2\n";
  CHECK_THROWS_WITH_AS(dataset_from_csv_string(bad_number),
                       doctest::Contains("line 3"), DataError);

  // Non-increasing times within a subject violate dataset invariants.
  const std::string bad_times =
      "subject,time,y1,x1\na,0.5,1,2\na,0.25,1,2\n";
  CHECK_THROWS(dataset_from_csv_string(bad_times));

  // Windows line endings parse fine.
  const std::string crlf = "subject,time,y1,x1\r\na,0,1,2\r\na,1,3,2\r\n";
  const LongitudinalDataset data = dataset_from_csv_string(crlf);
  CHECK(data.subjects[0].Y(1, 0) == 3.0);
}

TEST_CASE("fit JSON round trip preserves coefficients and structure") {
  const SplineBasis basis(9, 3, 0.0, 1.0);
  FitResult fit;
  fit.coef = CoefficientSet::zero(9, 3, 5);
  Rng rng(55);
  for (int m = 0; m < 9; ++m)
    for (int k = 0; k < 3; ++k) fit.coef.A(m, k) = rng.normal();
  fit.coef.B[2].setConstant(1.25);
  fit.coef.B[4].col(1).setLinSpaced(9, -1.0, 1.0);
  fit.active_set = {2, 4};
  fit.changepoints_alpha = {{1, 6}, {}, {3}};
  fit.converged = true;
  fit.sweeps = 17;
  fit.objective_trace = {5.0, 2.0, 1.5};

  const std::string text = fit_to_json(fit, basis);
  const LoadedFit back = fit_from_json(text);

  CHECK(back.basis.num_basis() == 9);
  CHECK(back.basis.degree() == 3);
  CHECK(back.basis.t_lo() == 0.0);
  CHECK(back.basis.t_hi() == 1.0);
  CHECK(back.result.coef.A == fit.coef.A);
  REQUIRE(back.result.coef.p() == 5);
  for (int j = 0; j < 5; ++j)
    CHECK(back.result.coef.B[j] == fit.coef.B[j]);
  CHECK(back.result.active_set == fit.active_set);
  CHECK(back.result.changepoints_alpha == fit.changepoints_alpha);
  CHECK(back.result.converged);
  CHECK(back.result.sweeps == 17);
  CHECK(back.result.final_objective() == 1.5);
}

TEST_CASE("broken coefficient JSON is rejected") {
  CHECK_THROWS_AS(fit_from_json("not json"), DataError);
  CHECK_THROWS_AS(fit_from_json("{\"M\": 5}"), DataError);
  CHECK_THROWS_AS(fit_from_json("{}"), DataError);
}
