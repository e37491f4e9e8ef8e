#include "vesselreg/errors.hpp"

namespace vesselreg {

const char* errc_name(errc code) {
  switch (code) {
    case errc::empty_input: return "EmptyInput";
    case errc::non_grid_input: return "NonGridInput";
    case errc::empty_mask: return "EmptyMask";
    case errc::empty_volume: return "EmptyVolume";
    case errc::unreachable: return "Unreachable";
    case errc::too_few_end_nodes: return "TooFewEndNodes";
    case errc::too_few_junctions: return "TooFewJunctions";
    case errc::degenerate_depth: return "DegenerateDepth";
    case errc::degenerate_branch: return "DegenerateBranch";
    case errc::count_mismatch: return "CountMismatch";
    case errc::no_trunks: return "NoTrunks";
    case errc::zero_length_trunk: return "ZeroLengthTrunk";
    case errc::singular_system: return "SingularSystem";
    case errc::line_search_failure: return "LineSearchFailure";
    case errc::empty_curve: return "EmptyCurve";
    case errc::invalid_params: return "InvalidParams";
    case errc::format_error: return "FormatError";
  }
  return "UnknownError";
}

}  // namespace vesselreg
