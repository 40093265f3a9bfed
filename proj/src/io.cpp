#include "teamlq/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "teamlq/errors.hpp"
#include "teamlq/stiefel.hpp"

namespace teamlq {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

// Line-oriented tokenizer that tracks the current line for error messages.
class LineReader {
 public:
  explicit LineReader(const std::string& path) : in_(path), path_(path) {
    if (!in_) throw ParseError(path + ": cannot open", -1);
  }

  // Next non-empty line split on whitespace.
  std::vector<std::string> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++lineno_;
      std::istringstream ss(line);
      std::vector<std::string> tokens;
      std::string tok;
      while (ss >> tok) tokens.push_back(tok);
      if (!tokens.empty()) return tokens;
    }
    throw ParseError(path_ + ": unexpected end of file", lineno_);
  }

  long line() const { return lineno_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(path_ + ": " + what, lineno_);
  }

  double to_double(const std::string& tok) const {
    try {
      size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) fail("bad number '" + tok + "'");
      return v;
    } catch (const ParseError&) {
      throw;
    } catch (...) {
      fail("bad number '" + tok + "'");
    }
  }

  long to_int(const std::string& tok) const {
    try {
      size_t used = 0;
      const long v = std::stol(tok, &used);
      if (used != tok.size()) fail("bad integer '" + tok + "'");
      return v;
    } catch (const ParseError&) {
      throw;
    } catch (...) {
      fail("bad integer '" + tok + "'");
    }
  }

  Eigen::MatrixXd matrix(long rows, long cols) {
    if (rows <= 0 || cols <= 0) fail("bad matrix dimensions in header");
    Eigen::MatrixXd out(rows, cols);
    for (long r = 0; r < rows; ++r) {
      const auto tokens = next();
      if (static_cast<long>(tokens.size()) != cols)
        fail("expected " + std::to_string(cols) + " values in matrix row");
      for (long c = 0; c < cols; ++c) out(r, c) = to_double(tokens[c]);
    }
    return out;
  }

 private:
  std::ifstream in_;
  std::string path_;
  long lineno_ = 0;
};

void expect(LineReader& lr, const std::vector<std::string>& tokens,
            const std::string& word) {
  if (tokens.empty() || tokens[0] != word) lr.fail("expected '" + word + "'");
}

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
  for (long r = 0; r < m.rows(); ++r) {
    for (long c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

}  // namespace

void save_instance(const ProblemInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing", -1);
  out << "teamlq-instance v1\n";
  out << "m " << inst.spec.m << '\n';
  out << "obs_dims";
  for (int d : inst.spec.obs_dims) out << ' ' << d;
  out << '\n';
  out << "n " << inst.n << '\n';
  out << "Q\n";
  write_matrix(out, inst.spec.Q);
  out << "W\n";
  write_matrix(out, inst.spec.W);
  out << "R\n";
  write_matrix(out, inst.R.cols);
  out << "end\n";
}

ProblemInstance load_instance(const std::string& path) {
  LineReader lr(path);
  auto tokens = lr.next();
  if (tokens.size() != 2 || tokens[0] != "teamlq-instance" || tokens[1] != "v1")
    lr.fail("not a teamlq-instance v1 file");

  tokens = lr.next();
  expect(lr, tokens, "m");
  if (tokens.size() != 2) lr.fail("expected 'm <count>'");
  TeamSpec spec;
  spec.m = static_cast<int>(lr.to_int(tokens[1]));
  if (spec.m <= 0) lr.fail("m must be positive");

  tokens = lr.next();
  expect(lr, tokens, "obs_dims");
  if (static_cast<int>(tokens.size()) != spec.m + 1)
    lr.fail("expected one obs_dims entry per player");
  for (int i = 1; i <= spec.m; ++i)
    spec.obs_dims.push_back(static_cast<int>(lr.to_int(tokens[i])));

  tokens = lr.next();
  expect(lr, tokens, "n");
  if (tokens.size() != 2) lr.fail("expected 'n <dim>'");
  const int n = static_cast<int>(lr.to_int(tokens[1]));

  tokens = lr.next();
  expect(lr, tokens, "Q");
  spec.Q = lr.matrix(spec.m, spec.m);
  tokens = lr.next();
  expect(lr, tokens, "W");
  spec.W = lr.matrix(spec.l(), spec.l());
  tokens = lr.next();
  expect(lr, tokens, "R");
  OrthonormalMatrix R{lr.matrix(n, spec.l())};
  tokens = lr.next();
  expect(lr, tokens, "end");

  if (R.orthonormality_defect() > 1e-10)
    lr.fail("R is not orthonormal within 1e-10");
  try {
    return build_instance(spec, n, std::move(R));
  } catch (const SpecError& e) {
    throw ParseError(path + ": " + e.what(), lr.line());
  }
}

void save_policy(const TabulatedPolicy& policy, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing", -1);
  out << "teamlq-policy v1\n";
  out << "players " << policy.players.size() << '\n';
  for (size_t p = 0; p < policy.players.size(); ++p) {
    const auto& t = policy.players[p];
    out << "player " << p << " dims " << t.dims << " bins " << t.bins_per_axis
        << '\n';
    for (int d = 0; d < t.dims; ++d) {
      out << "edges " << d << '\n';
      for (size_t k = 0; k < t.edges[d].size(); ++k) {
        if (k) out << ' ';
        out << format_double(t.edges[d][k]);
      }
      out << '\n';
    }
    out << "values\n";
    for (size_t k = 0; k < t.values.size(); ++k) {
      if (k) out << ' ';
      out << format_double(t.values[k]);
    }
    out << '\n';
  }
  out << "end\n";
}

TabulatedPolicy load_policy(const std::string& path) {
  LineReader lr(path);
  auto tokens = lr.next();
  if (tokens.size() != 2 || tokens[0] != "teamlq-policy" || tokens[1] != "v1")
    lr.fail("not a teamlq-policy v1 file");
  tokens = lr.next();
  expect(lr, tokens, "players");
  if (tokens.size() != 2) lr.fail("expected 'players <count>'");
  const long nplayers = lr.to_int(tokens[1]);
  if (nplayers <= 0) lr.fail("players must be positive");

  TabulatedPolicy policy;
  policy.players.resize(nplayers);
  for (long p = 0; p < nplayers; ++p) {
    tokens = lr.next();
    if (tokens.size() != 6 || tokens[0] != "player" || tokens[2] != "dims" ||
        tokens[4] != "bins")
      lr.fail("expected 'player <i> dims <d> bins <b>'");
    if (lr.to_int(tokens[1]) != p) lr.fail("players out of order");
    auto& t = policy.players[p];
    t.dims = static_cast<int>(lr.to_int(tokens[3]));
    t.bins_per_axis = static_cast<int>(lr.to_int(tokens[5]));
    if (t.dims <= 0 || t.dims > 2 || t.bins_per_axis <= 0)
      lr.fail("bad dims/bins header");
    t.edges.resize(t.dims);
    for (int d = 0; d < t.dims; ++d) {
      tokens = lr.next();
      if (tokens.size() != 2 || tokens[0] != "edges" || lr.to_int(tokens[1]) != d)
        lr.fail("expected 'edges " + std::to_string(d) + "'");
      tokens = lr.next();
      if (static_cast<int>(tokens.size()) != t.bins_per_axis + 1)
        lr.fail("expected bins+1 edge values");
      t.edges[d].resize(tokens.size());
      for (size_t k = 0; k < tokens.size(); ++k)
        t.edges[d][k] = lr.to_double(tokens[k]);
      for (size_t k = 1; k < t.edges[d].size(); ++k)
        if (!(t.edges[d][k] > t.edges[d][k - 1]))
          lr.fail("edges must be strictly increasing");
    }
    tokens = lr.next();
    expect(lr, tokens, "values");
    tokens = lr.next();
    int cells = 1;
    for (int d = 0; d < t.dims; ++d) cells *= t.bins_per_axis;
    if (static_cast<int>(tokens.size()) != cells)
      lr.fail("expected bins^dims cell values");
    t.values.resize(cells);
    for (int k = 0; k < cells; ++k) t.values[k] = lr.to_double(tokens[k]);
  }
  tokens = lr.next();
  expect(lr, tokens, "end");
  return policy;
}

struct CsvWriter::Impl {
  std::ofstream out;
};

CsvWriter::CsvWriter(const std::string& path) : impl_(new Impl) {
  impl_->out.open(path);
  if (!impl_->out) {
    delete impl_;
    throw ParseError(path + ": cannot open for writing", -1);
  }
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) impl_->out << ',';
    impl_->out << cells[i];
  }
  impl_->out << '\n';
}

namespace {
std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}
std::string label_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}
}  // namespace

void write_svg_line_chart(const std::string& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<ChartSeries>& series, bool log_x) {
  constexpr double width = 640, height = 420;
  constexpr double ml = 70, mr = 20, mt = 40, mb = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      const double xv = log_x ? std::log10(std::max(x, 1e-300)) : x;
      xmin = std::min(xmin, xv);
      xmax = std::max(xmax, xv);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (xmin > xmax) {
    xmin = 0;
    xmax = 1;
  }
  if (ymin > ymax) {
    ymin = 0;
    ymax = 1;
  }
  if (xmax - xmin < 1e-12) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;
  auto px = [&](double x) {
    const double xv = log_x ? std::log10(std::max(x, 1e-300)) : x;
    return ml + (xv - xmin) / (xmax - xmin) * (width - ml - mr);
  };
  auto py = [&](double y) {
    return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb);
  };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                 "#ff7f0e"};
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing", -1);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";
  // axes
  out << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\""
      << width - mr << "\" y2=\"" << height - mb
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
      << height - mb << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = xmin + (xmax - xmin) * k / 4;
    const double vx = log_x ? std::pow(10.0, fx) : fx;
    const double x = ml + (fx - xmin) / (xmax - xmin) * (width - ml - mr);
    out << "<line x1=\"" << svg_num(x) << "\" y1=\"" << height - mb << "\" x2=\""
        << svg_num(x) << "\" y2=\"" << height - mb + 5
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << svg_num(x) << "\" y=\"" << height - mb + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << label_num(vx) << "</text>\n";
    const double fy = ymin + (ymax - ymin) * k / 4;
    const double y = py(fy);
    out << "<line x1=\"" << ml - 5 << "\" y1=\"" << svg_num(y) << "\" x2=\"" << ml
        << "\" y2=\"" << svg_num(y) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << svg_num(y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << label_num(fy) << "</text>\n";
  }
  out << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << x_label << (log_x ? " (log scale)" : "") << "</text>\n";
  out << "<text x=\"16\" y=\"" << (mt + height - mb) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << (mt + height - mb) / 2 << ")\">" << y_label
      << "</text>\n";
  for (size_t si = 0; si < series.size(); ++si) {
    const char* color = colors[si % 5];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (auto [x, y] : series[si].points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      out << svg_num(px(x)) << ',' << svg_num(py(y)) << ' ';
    }
    out << "\"/>\n";
    for (auto [x, y] : series[si].points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      out << "<circle cx=\"" << svg_num(px(x)) << "\" cy=\"" << svg_num(py(y))
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    out << "<text x=\"" << width - mr - 8 << "\" y=\"" << mt + 16 * (si + 1)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" "
        << "fill=\"" << color << "\">" << series[si].label << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace teamlq
