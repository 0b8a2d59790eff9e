#include "errors.hpp"

namespace riq {

const char *to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::missing_file: return "MissingFile";
    case ErrorCode::manifest_mismatch: return "ManifestMismatch";
    case ErrorCode::non_finite_weight: return "NonFiniteWeight";
    case ErrorCode::io_failure: return "IoFailure";
    case ErrorCode::empty_arch: return "EmptyArch";
    case ErrorCode::shape_mismatch: return "ShapeMismatch";
    case ErrorCode::zero_output_norm: return "ZeroOutputNorm";
    case ErrorCode::zero_vector: return "ZeroVector";
    case ErrorCode::non_positive_delta: return "NonPositiveDelta";
    case ErrorCode::zero_norm_layer: return "ZeroNormLayer";
    case ErrorCode::degenerate_range: return "DegenerateRange";
    case ErrorCode::too_few_samples: return "TooFewSamples";
    case ErrorCode::empty_input: return "EmptyInput";
    case ErrorCode::eps0_out_of_range: return "Eps0OutOfRange";
    case ErrorCode::unsatisfiable: return "Unsatisfiable";
    case ErrorCode::budget_out_of_range: return "BudgetOutOfRange";
    case ErrorCode::alphabet_too_large: return "AlphabetTooLarge";
    case ErrorCode::symbol_not_in_table: return "SymbolNotInTable";
    case ErrorCode::corrupt_stream: return "CorruptStream";
    case ErrorCode::archive_mismatch: return "Mismatch";
    case ErrorCode::bad_magic: return "BadMagic";
    case ErrorCode::version_unsupported: return "VersionUnsupported";
    case ErrorCode::checksum_mismatch: return "ChecksumMismatch";
    case ErrorCode::degenerate_fit: return "DegenerateFit";
    case ErrorCode::dimension_too_large: return "DimensionTooLarge";
    case ErrorCode::unknown_layer: return "UnknownLayer";
    }
    return "Unknown";
}

} // namespace riq
