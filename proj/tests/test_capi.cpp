#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <string>

#include <json.hpp>

#include "ajl/ajl.h"

using nlohmann::json;

namespace {

std::string take(char* s) {
  REQUIRE(s != nullptr);
  std::string out(s);
  ajl_string_free(s);
  return out;
}

ajl_dataset* small_train() {
  int err = 0;
  ajl_dataset* d = ajl_simulate(
      R"({"preset":"S1","n":20,"p":10,"s":4,"T":12,"n_test":5,"seed":3})", 0,
      nullptr, &err);
  REQUIRE(d != nullptr);
  return d;
}

const char* kFastFit =
    R"({"M":8,"cv":false,"pilot_lambda_g":0.05,"pilot_lambda_f":0.05,
        "lambda_g":0.05,"lambda_f":0.05,"lambda_f_beta":0.05})";

}  // namespace

TEST_CASE("error paths set codes and messages") {
  int err = 0;
  CHECK(ajl_simulate("{\"preset\":\"S77\"}", 0, nullptr, &err) == nullptr);
  CHECK(err == AJL_ERR_CONFIG);
  CHECK(std::strlen(ajl_last_error_message()) > 0);

  CHECK(ajl_simulate("this is not json", 0, nullptr, &err) == nullptr);
  CHECK(err == AJL_ERR_CONFIG);

  CHECK(ajl_dataset_parse_csv("bad,header\n1,2\n", 0, &err) == nullptr);
  CHECK(err == AJL_ERR_DATA);

  char* out = nullptr;
  CHECK(ajl_dataset_write_csv(nullptr, &out) == AJL_ERR_CONFIG);
  CHECK(ajl_fit_run(nullptr, "{}", &err) == nullptr);
  CHECK(err == AJL_ERR_CONFIG);
  CHECK(ajl_cv_run(nullptr, "{}", &out) == AJL_ERR_CONFIG);
  ajl_dataset_free(nullptr);  // null tolerated
  ajl_fit_free(nullptr);
  ajl_string_free(nullptr);
}

TEST_CASE("dataset round trip through the C boundary") {
  ajl_dataset* d = small_train();
  int n = 0, p = 0, K = 0;
  REQUIRE(ajl_dataset_dims(d, &n, &p, &K) == AJL_OK);
  CHECK(n == 20);
  CHECK(p == 10);
  CHECK(K == 5);

  char* csv = nullptr;
  REQUIRE(ajl_dataset_write_csv(d, &csv) == AJL_OK);
  const std::string text = take(csv);

  int err = 0;
  ajl_dataset* back = ajl_dataset_parse_csv(text.c_str(), 0, &err);
  REQUIRE(back != nullptr);
  char* csv2 = nullptr;
  REQUIRE(ajl_dataset_write_csv(back, &csv2) == AJL_OK);
  CHECK(take(csv2) == text);

  ajl_dataset_free(back);
  ajl_dataset_free(d);
}

TEST_CASE("simulation exposes the planted truth") {
  int err = 0;
  char* truth_json = nullptr;
  ajl_dataset* d = ajl_simulate(
      R"({"preset":"S1","n":5,"p":8,"s":4,"T":10,"n_test":3,"seed":1})", 0,
      &truth_json, &err);
  REQUIRE(d != nullptr);
  const json truth = json::parse(take(truth_json));
  CHECK(truth.at("active_set").size() == 4);
  ajl_dataset_free(d);

  // which = 1 yields the test split with its own size.
  ajl_dataset* t = ajl_simulate(
      R"({"preset":"S1","n":5,"p":8,"s":4,"T":10,"n_test":3,"seed":1})", 1,
      nullptr, &err);
  REQUIRE(t != nullptr);
  int n = 0, p = 0, K = 0;
  ajl_dataset_dims(t, &n, &p, &K);
  CHECK(n == 3);
  ajl_dataset_free(t);
}

TEST_CASE("fit, serialize, reload, and predict through the C API") {
  ajl_dataset* d = small_train();
  int err = 0;
  ajl_fit* fit = ajl_fit_run(d, kFastFit, &err);
  REQUIRE(fit != nullptr);

  double pe1 = 0.0;
  REQUIRE(ajl_fit_prediction_error(fit, d, &pe1) == AJL_OK);
  CHECK(pe1 > 0.0);

  char* coef_json = nullptr;
  REQUIRE(ajl_fit_to_json(fit, &coef_json) == AJL_OK);
  const std::string coef = take(coef_json);
  const json parsed = json::parse(coef);
  CHECK(parsed.at("M") == 8);
  CHECK(parsed.contains("active_set"));

  ajl_fit* loaded = ajl_fit_load(d, coef.c_str(), &err);
  REQUIRE(loaded != nullptr);
  double pe2 = 0.0;
  REQUIRE(ajl_fit_prediction_error(loaded, d, &pe2) == AJL_OK);
  CHECK(pe1 == pe2);

  char* curves = nullptr;
  REQUIRE(ajl_fit_curves_csv(fit, 25, &curves) == AJL_OK);
  const std::string curve_text = take(curves);
  CHECK(curve_text.rfind("t,alpha_1", 0) == 0);
  CHECK(std::count(curve_text.begin(), curve_text.end(), '\n') == 26);

  // Mismatched dataset dimensions are rejected on load.
  ajl_dataset* other = ajl_simulate(
      R"({"preset":"S1","n":4,"p":3,"K":2,"s":2,"T":8,"n_test":2,"seed":9})",
      0, nullptr, &err);
  REQUIRE(other != nullptr);
  CHECK(ajl_fit_load(other, coef.c_str(), &err) == nullptr);
  CHECK(err == AJL_ERR_DATA);

  ajl_dataset_free(other);
  ajl_fit_free(loaded);
  ajl_fit_free(fit);
  ajl_dataset_free(d);
}

TEST_CASE("bands come back as CSV, with sensible failures") {
  ajl_dataset* d = small_train();
  int err = 0;
  ajl_fit* fit = ajl_fit_run(d, kFastFit, &err);
  REQUIRE(fit != nullptr);

  char* out = nullptr;
  REQUIRE(ajl_bands_csv(
              fit, R"({"target":"alpha","outcome":1,"grid":30})", &out) ==
          AJL_OK);
  const std::string csv = take(out);
  CHECK(csv.rfind("t,center,lower,upper,flagged", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 31);

  CHECK(ajl_bands_csv(fit, R"({"target":"alpha","outcome":99})", &out) ==
        AJL_ERR_CONFIG);
  CHECK(ajl_bands_csv(fit, R"({"target":"beta","covariate":10,"outcome":1})",
                      &out) == AJL_ERR_NUMERIC);

  ajl_fit_free(fit);
  ajl_dataset_free(d);
}

TEST_CASE("cross-validation reports a surface and chosen penalties") {
  ajl_dataset* d = small_train();
  char* out = nullptr;
  REQUIRE(ajl_cv_run(d, R"({"M":8,"folds":3,"grid_g":3,"grid_f":3})",
                     &out) == AJL_OK);
  const json result = json::parse(take(out));
  CHECK(result.at("lambda_g").get<double>() > 0.0);
  CHECK(result.at("lambda_f").get<double>() > 0.0);
  CHECK(result.at("surface").size() == 9);
  ajl_dataset_free(d);
}

TEST_CASE("study reproduction returns a complete bundle") {
  char* out = nullptr;
  const int err = ajl_reproduce(
      R"({"scenario":"S1","n":10,"p":8,"s":4,"T":10,"n_test":5,"R":2,
          "workers":1,"methods":["Oracle"],"seed":11})",
      &out);
  REQUIRE(err == AJL_OK);
  const json bundle = json::parse(take(out));
  CHECK(bundle.at("failed_replications") == 0);
  const std::string summary = bundle.at("summary_csv").get<std::string>();
  CHECK(summary.rfind("scenario,method", 0) == 0);
  CHECK(summary.find("Oracle") != std::string::npos);
  CHECK(bundle.at("raw_csv").get<std::string>().find("S1,Oracle,") !=
        std::string::npos);
  json manifest = json::parse(bundle.at("manifest_json").get<std::string>());
  CHECK(manifest.contains("version"));
}
