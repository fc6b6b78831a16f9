#ifndef MARTS_IO_HPP
#define MARTS_IO_HPP

#include <filesystem>
#include <string>

#include "json.hpp"
#include "marts/estimation.hpp"
#include "marts/monte_carlo.hpp"
#include "marts/types.hpp"

namespace marts::io {

using json = nlohmann::ordered_json;

/// Long-format series CSV. Header `t,row,col,value`; one line per cell, plus
/// optional transition lines with row label `__s__` and an empty col field.
/// Writers emit a canonical byte layout: frames ordered by t, cells in
/// column-major order, the transition line last per t, values with 17
/// significant digits, LF endings. Readers accept any row order but reject
/// missing cells, duplicates, non-contiguous t and non-numeric values, each
/// with the offending line number.
MatrixSeries read_series(const std::filesystem::path& path);
void write_series(const MatrixSeries& series, const std::filesystem::path& path);

json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j, const std::string& what);

json model_to_json(const ModelSpec& model);
ModelSpec model_from_json(const json& j);

json fit_to_json(const FitResult& fit);
FitResult fit_from_json(const json& j);
void write_fit(const FitResult& fit, const std::filesystem::path& path);
FitResult read_fit(const std::filesystem::path& path);

/// One row per line, header
/// `replication,estimator,frob_regime1,frob_regime2,c_hat,gamma_hat,seconds,converged`;
/// absent values are empty fields. Written atomically (temp file + rename).
void write_mc_rows(const std::vector<McResultRow>& rows, const std::filesystem::path& path);
std::vector<McResultRow> read_mc_rows(const std::filesystem::path& path);

json summary_to_json(const McSummary& summary);
/// Atomic (write-then-rename) so an interrupted batch never leaves a partial
/// summary on disk.
void write_mc_summary(const McSummary& summary, const std::filesystem::path& path);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const json& j, const std::filesystem::path& path, bool atomic = false);

/// Shortest decimal that round-trips a double (17 significant digits).
std::string format_double(double v);

}  // namespace marts::io

#endif
