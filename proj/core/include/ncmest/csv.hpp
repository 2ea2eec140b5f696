#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace ncmest::csv {

// Numeric formatting used for all emitted files; fixed format keeps reruns
// byte-identical.
std::string fmt(double x);        // shortest round-trippable (%.17g)
std::string fmt_short(double x);  // report cells (%.12g)

// Reads an n-by-p comma-separated matrix. The literal token NA (and empty
// cells) map to NaN, which downstream code treats as a missing mark. Throws
// std::runtime_error with a line diagnostic on ragged rows or parse failures.
Eigen::MatrixXd read_matrix(const std::string& path);

// One value per line.
Eigen::VectorXd read_vector(const std::string& path);

void write_matrix(const std::string& path, const Eigen::MatrixXd& m, bool na_for_nan = true);
void write_vector(const std::string& path, const Eigen::VectorXd& v);

void write_text(const std::string& path, const std::string& text);

}  // namespace ncmest::csv
