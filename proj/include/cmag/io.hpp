// SPDX-License-Identifier: Apache-2.0
//
// Text formats. Every writer starts with a "format-version" line; readers
// skip '#' comment lines.
//
//   field      JSON, doubles written shortest-round-trip so load(save(f)) == f
//   matrix     "m n" then m rows of n values
//   sweep      CSV (m,trials,successes,p_suc) or JSON with every record
//   series     two columns, time [s] and value [nT]

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cmag/experiments.hpp"
#include "cmag/signal_models.hpp"

namespace cmag {

std::string field_to_json(const FieldModel& field);
FieldModel field_from_json(const std::string& text);
void save_field(const std::string& path, const FieldModel& field);
FieldModel load_field(const std::string& path);

void write_matrix(std::ostream& os, const Eigen::MatrixXd& A);
Eigen::MatrixXd read_matrix(std::istream& is);
void save_matrix(const std::string& path, const Eigen::MatrixXd& A);
Eigen::MatrixXd load_matrix(const std::string& path);

void write_sweep_csv(std::ostream& os, const SweepResult& result);
std::string sweep_to_json(const SweepResult& result);
void save_sweep(const std::string& path, const SweepResult& result, bool json);

void write_series(std::ostream& os, const std::vector<double>& t, const std::vector<double>& value);
void save_series(const std::string& path, const std::vector<double>& t, const std::vector<double>& value);

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);

}  // namespace cmag
