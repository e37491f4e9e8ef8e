#pragma once

#include <stdexcept>
#include <string>

namespace vesselreg {

enum class errc {
  empty_input,
  non_grid_input,
  empty_mask,
  empty_volume,
  unreachable,
  too_few_end_nodes,
  too_few_junctions,
  degenerate_depth,
  degenerate_branch,
  count_mismatch,
  no_trunks,
  zero_length_trunk,
  singular_system,
  line_search_failure,
  empty_curve,
  invalid_params,
  format_error,
};

const char* errc_name(errc code);

// Domain error carrying a machine-readable code and, once it crosses the
// registration pipeline, the stage that raised it.
class Error : public std::runtime_error {
public:
  Error(errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Error(errc code, const std::string& stage, const std::string& message)
      : std::runtime_error("[" + stage + "] " + errc_name(code) + ": " + message),
        code_(code),
        stage_(stage) {}

  errc code() const { return code_; }
  const std::string& stage() const { return stage_; }

private:
  errc code_;
  std::string stage_;
};

}  // namespace vesselreg
