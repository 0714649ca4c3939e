#pragma once

#include <string>
#include <vector>

#include "regfeal/datagen.hpp"
#include "regfeal/hermite.hpp"
#include "regfeal/solver.hpp"

#include "json.hpp"

namespace regfeal {

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

// CSV with header x_1,...,x_d,y. One row per observation.
void write_csv(const std::string& path, const Matrix& X, const Vector& Y);
void read_csv(const std::string& path, Matrix& X, Vector& Y);

nlohmann::json matrix_to_json(const Matrix& M);
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const FitReport& report);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace regfeal
