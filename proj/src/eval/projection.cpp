#include "har/eval/projection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "har/io.hpp"

namespace har::eval {

Matrix pca_2d(const Matrix& points) {
  if (points.rows() < 1) throw std::invalid_argument("pca: no points");
  const Matrix centred = points.rowwise() - points.colwise().mean();
  if (points.cols() < 2) {
    Matrix out = Matrix::Zero(points.rows(), 2);
    out.col(0) = centred.col(0);
    return out;
  }
  const Matrix cov = centred.transpose() * centred;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  // Eigenvalues ascend; the last two columns span the leading subspace.
  const Eigen::Index d = points.cols();
  Matrix basis(d, 2);
  basis.col(0) = solver.eigenvectors().col(d - 1);
  basis.col(1) = solver.eigenvectors().col(d - 2);
  // Fix the sign so the largest-magnitude loading is positive.
  for (Eigen::Index c = 0; c < 2; ++c) {
    Eigen::Index arg = 0;
    basis.col(c).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, c) < 0) basis.col(c) *= -1.0;
  }
  return centred * basis;
}

namespace {

// Row-conditional affinities with the bandwidth found by bisection on entropy.
Matrix conditional_affinities(const Matrix& d2, double perplexity) {
  const Eigen::Index n = d2.rows();
  Matrix p = Matrix::Zero(n, n);
  const double target = std::log(perplexity);
  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 100; ++it) {
      double sum = 0.0, weighted = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double v = std::exp(-beta * d2(i, j));
        p(i, j) = v;
        sum += v;
        weighted += v * d2(i, j);
      }
      if (sum <= 0.0) sum = std::numeric_limits<double>::min();
      const double entropy = std::log(sum) + beta * weighted / sum;
      p.row(i) /= sum;
      const double diff = entropy - target;
      if (std::abs(diff) < 1e-5) break;
      if (diff > 0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
      } else {
        hi = beta;
        beta = (beta + lo) / 2.0;
      }
    }
  }
  return p;
}

}  // namespace

Matrix tsne_2d(const Matrix& points, const TsneOptions& opts) {
  const Eigen::Index n = points.rows();
  if (static_cast<std::size_t>(n) > opts.max_points) {
    throw std::invalid_argument("tsne: " + std::to_string(n) + " points exceed the exact-method cap of " +
                                std::to_string(opts.max_points) + "; use pca or subsample");
  }
  if (!(opts.perplexity > 0.0) || opts.perplexity >= static_cast<double>(n)) {
    throw std::invalid_argument("tsne: perplexity must be in (0, N)");
  }
  Matrix d2(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) d2(i, j) = (points.row(i) - points.row(j)).squaredNorm();
  }
  const Matrix cond = conditional_affinities(d2, opts.perplexity);
  Matrix p = (cond + cond.transpose()) / (2.0 * static_cast<double>(n));
  p = p.cwiseMax(1e-12);

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> g(0.0, 1e-4);
  Matrix y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) y(i, 0) = g(rng), y(i, 1) = g(rng);
  Matrix update = Matrix::Zero(n, 2), gains = Matrix::Ones(n, 2), grad(n, 2), num(n, n);

  for (std::size_t it = 0; it < opts.iterations; ++it) {
    const double exaggeration = it < opts.exaggeration_iterations ? opts.early_exaggeration : 1.0;
    const double momentum = it < opts.exaggeration_iterations ? 0.5 : 0.8;
    double zsum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      num(i, i) = 0.0;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double v = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
        num(i, j) = num(j, i) = v;
        zsum += 2.0 * v;
      }
    }
    grad.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double q = std::max(num(i, j) / zsum, 1e-12);
        grad.row(i) += 4.0 * (exaggeration * p(i, j) - q) * num(i, j) * (y.row(i) - y.row(j));
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < 2; ++c) {
        const bool same_sign = (grad(i, c) > 0) == (update(i, c) > 0);
        gains(i, c) = std::max(0.01, same_sign ? gains(i, c) * 0.8 : gains(i, c) + 0.2);
        update(i, c) = momentum * update(i, c) - opts.learning_rate * gains(i, c) * grad(i, c);
      }
    }
    y += update;
    y = y.rowwise() - y.colwise().mean();
  }
  return y;
}

double silhouette_score(const Matrix& points, const std::vector<int>& labels) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (labels.size() != n) throw std::invalid_argument("silhouette: label count mismatch");
  std::map<int, std::size_t> sizes;
  for (int l : labels) ++sizes[l];
  if (sizes.size() < 2) throw std::invalid_argument("silhouette: need at least two clusters");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::map<int, double> sum;
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) sum[labels[j]] += (points.row(static_cast<Eigen::Index>(i)) - points.row(static_cast<Eigen::Index>(j))).norm();
    }
    if (sizes[labels[i]] == 1) continue;
    const double a = sum[labels[i]] / static_cast<double>(sizes[labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [l, s] : sum) {
      if (l != labels[i]) b = std::min(b, s / static_cast<double>(sizes[l]));
    }
    const double m = std::max(a, b);
    if (m > 0) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

void write_projection_csv(const std::filesystem::path& path, const Matrix& coords, const std::vector<int>& labels) {
  std::ostringstream os;
  os.precision(9);
  os << "x,y,label\n";
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    os << coords(i, 0) << ',' << coords(i, 1) << ',' << labels[static_cast<std::size_t>(i)] << '\n';
  }
  io::write_text_file(path, os.str());
}

void write_scatter_svg(const std::filesystem::path& path, const Matrix& coords, const std::vector<int>& labels,
                       const std::vector<std::string>& label_names, const std::string& title) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                  "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"};
  constexpr double width = 640, height = 520, margin = 40, legend = 150;
  const double minx = coords.col(0).minCoeff(), maxx = coords.col(0).maxCoeff();
  const double miny = coords.col(1).minCoeff(), maxy = coords.col(1).maxCoeff();
  const double sx = (width - legend - 2 * margin) / std::max(maxx - minx, 1e-12);
  const double sy = (height - 2 * margin) / std::max(maxy - miny, 1e-12);
  auto colour = [&](int l) { return palette[static_cast<std::size_t>(std::max(l, 0)) % std::size(palette)]; };
  auto escape = [](const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '<') out += "&lt;";
      else if (c == '>') out += "&gt;";
      else if (c == '&') out += "&amp;";
      else out += c;
    }
    return out;
  };

  std::ostringstream os;
  char buf[160];
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << margin << "\" y=\"24\" font-size=\"15\">" << escape(title) << "</text>\n";
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    const double x = margin + (coords(i, 0) - minx) * sx;
    const double y = height - margin - (coords(i, 1) - miny) * sy;
    std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.5\" fill=\"%s\" fill-opacity=\"0.75\"/>\n", x, y,
                  colour(labels[static_cast<std::size_t>(i)]));
    os << buf;
  }
  std::vector<int> present(labels.begin(), labels.end());
  std::sort(present.begin(), present.end());
  present.erase(std::unique(present.begin(), present.end()), present.end());
  double ly = margin + 10;
  for (int l : present) {
    const std::string name = l >= 0 && static_cast<std::size_t>(l) < label_names.size()
                                 ? label_names[static_cast<std::size_t>(l)]
                                 : std::to_string(l);
    std::snprintf(buf, sizeof(buf), "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"5\" fill=\"%s\"/>", width - legend + 10, ly,
                  colour(l));
    os << buf << "<text x=\"" << width - legend + 20 << "\" y=\"" << ly + 4 << "\">" << escape(name) << "</text>\n";
    ly += 18;
  }
  os << "</svg>\n";
  io::write_text_file(path, os.str());
}

}  // namespace har::eval
