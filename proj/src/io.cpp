#include "ajl/io.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ajl/errors.hpp"

namespace ajl {

using nlohmann::json;

std::string dataset_to_csv(const LongitudinalDataset& data) {
  std::ostringstream os;
  os.precision(17);
  os << "subject,time";
  for (int k = 1; k <= data.K; ++k) os << ",y" << k;
  for (int j = 1; j <= data.p; ++j) os << ",x" << j;
  os << "\n";
  for (const auto& s : data.subjects)
    for (Eigen::Index l = 0; l < s.times.size(); ++l) {
      os << s.id << "," << s.times[l];
      for (int k = 0; k < data.K; ++k) os << "," << s.Y(l, k);
      for (int j = 0; j < data.p; ++j) os << "," << s.X(l, j);
      os << "\n";
    }
  return os.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, int line_no, const char* what) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line_no) + ": cannot parse " +
                    what + " value '" + s + "'");
  }
}

}  // namespace

LongitudinalDataset dataset_from_csv(std::istream& in, bool normalize_time) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "subject" || header[1] != "time")
    throw DataError("line 1: header must start with 'subject,time'");
  int K = 0, p = 0;
  size_t col = 2;
  while (col < header.size() &&
         header[col] == "y" + std::to_string(K + 1)) {
    ++K;
    ++col;
  }
  while (col < header.size() &&
         header[col] == "x" + std::to_string(p + 1)) {
    ++p;
    ++col;
  }
  if (K == 0)
    throw DataError("line 1: missing outcome column y1");
  if (col != header.size())
    throw DataError("line 1: unexpected column '" + header[col] +
                    "' (expected y1..yK then x1..xp)");

  LongitudinalDataset data;
  data.K = K;
  data.p = p;
  std::vector<std::string> order;
  struct Rows {
    std::vector<double> t;
    std::vector<Eigen::RowVectorXd> y, x;
  };
  std::map<std::string, Rows> rows;

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (static_cast<int>(f.size()) != 2 + K + p)
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(2 + K + p) + " fields, got " +
                      std::to_string(f.size()));
    const std::string& id = f[0];
    if (!rows.count(id)) order.push_back(id);
    Rows& r = rows[id];
    r.t.push_back(parse_number(f[1], line_no, "time"));
    Eigen::RowVectorXd y(K), x(p);
    for (int k = 0; k < K; ++k)
      y[k] = parse_number(f[2 + static_cast<size_t>(k)], line_no, "outcome");
    for (int j = 0; j < p; ++j)
      x[j] = parse_number(f[2 + static_cast<size_t>(K + j)], line_no,
                          "covariate");
    r.y.push_back(y);
    r.x.push_back(x);
  }
  if (order.empty()) throw DataError("no data rows");

  double t_min = std::numeric_limits<double>::infinity();
  double t_max = -std::numeric_limits<double>::infinity();
  for (const auto& id : order)
    for (double t : rows[id].t) {
      t_min = std::min(t_min, t);
      t_max = std::max(t_max, t);
    }
  const bool scale = normalize_time && t_max > t_min;

  for (const auto& id : order) {
    const Rows& r = rows[id];
    SubjectRecord s;
    s.id = id;
    const int T = static_cast<int>(r.t.size());
    s.times.resize(T);
    s.Y.resize(T, K);
    s.X.resize(T, p);
    for (int l = 0; l < T; ++l) {
      s.times[l] = scale ? (r.t[static_cast<size_t>(l)] - t_min) /
                               (t_max - t_min)
                         : r.t[static_cast<size_t>(l)];
      s.Y.row(l) = r.y[static_cast<size_t>(l)];
      s.X.row(l) = r.x[static_cast<size_t>(l)];
    }
    data.subjects.push_back(std::move(s));
  }
  if (normalize_time) {
    data.t_lo = 0.0;
    data.t_hi = 1.0;
  } else {
    data.t_lo = t_min;
    data.t_hi = t_max;
  }
  data.validate();
  return data;
}

LongitudinalDataset dataset_from_csv_string(const std::string& text,
                                            bool normalize_time) {
  std::istringstream is(text);
  return dataset_from_csv(is, normalize_time);
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  if (!rows.is_array() || rows.empty())
    throw DataError("expected a non-empty matrix");
  const Eigen::Index R = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index C = static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd m(R, C);
  for (Eigen::Index i = 0; i < R; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != C)
      throw DataError("ragged matrix rows");
    for (Eigen::Index j = 0; j < C; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

}  // namespace

std::string fit_to_json(const FitResult& result, const SplineBasis& basis) {
  json out;
  out["M"] = basis.num_basis();
  out["degree"] = basis.degree();
  out["t_lo"] = basis.t_lo();
  out["t_hi"] = basis.t_hi();
  out["K"] = result.coef.K();
  out["p"] = result.coef.p();
  out["knots"] = basis.knots();
  out["A"] = matrix_to_json(result.coef.A);
  json blocks = json::array();
  for (const auto& B : result.coef.B) blocks.push_back(matrix_to_json(B));
  out["B"] = std::move(blocks);
  out["active_set"] = result.active_set;
  out["changepoints_alpha"] = result.changepoints_alpha;
  json cp_times = json::array();
  for (const auto& per_k : result.changepoints_alpha) {
    json times = json::array();
    for (int m : per_k) times.push_back(basis.edge_time(m));
    cp_times.push_back(std::move(times));
  }
  out["changepoint_times_alpha"] = std::move(cp_times);
  out["converged"] = result.converged;
  out["sweeps"] = result.sweeps;
  out["objective"] = result.objective_trace.empty()
                         ? 0.0
                         : result.objective_trace.back();
  return out.dump();
}

LoadedFit fit_from_json(const std::string& text) {
  json in;
  try {
    in = json::parse(text);
  } catch (const std::exception& e) {
    throw DataError(std::string("invalid coefficients JSON: ") + e.what());
  }
  try {
    const int M = in.at("M").get<int>();
    const int degree = in.at("degree").get<int>();
    LoadedFit out{FitResult{},
                  SplineBasis(M, degree, in.at("t_lo").get<double>(),
                              in.at("t_hi").get<double>())};
    out.result.coef.A = matrix_from_json(in.at("A"));
    for (const auto& b : in.at("B"))
      out.result.coef.B.push_back(matrix_from_json(b));
    out.result.active_set = in.at("active_set").get<std::vector<int>>();
    out.result.changepoints_alpha =
        in.at("changepoints_alpha").get<std::vector<std::vector<int>>>();
    out.result.converged = in.value("converged", true);
    out.result.sweeps = in.value("sweeps", 0);
    out.result.objective_trace.push_back(in.value("objective", 0.0));
    return out;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed coefficients JSON: ") + e.what());
  }
}

}  // namespace ajl
