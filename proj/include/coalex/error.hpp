#ifndef COALEX_ERROR_HPP
#define COALEX_ERROR_HPP

#include <stdexcept>
#include <string>

namespace coalex {

enum class Errc {
    // model building
    CycleDetected,
    IncompleteTruthTable,
    TargetNotUnique,
    NoiseHasParents,
    ObservedWithoutNoiseParent,
    MissingNoiseValue,
    ValueOutOfDomain,
    TargetInCoalition,
    InvalidThreshold,
    DegenerateParameter,
    // inference
    StateSpaceTooLarge,
    PositivityViolated,
    UnsupportedMechanism,
    InconsistentObservation,
    // scoring
    UndefinedScore,
    InvalidDistance,
    CoalitionValueMismatch,
    EmptySampleList,
    AllSamplesUndefined,
    // search
    EmptyCandidateSet,
    PreconditionNotFullExplanation,
    NoImprovingAssignment,
    // rca
    TooManyPlayers,
    AllScoresZero,
    MethodFailure,
    // model explanation
    UnknownFeature,
    OrderingIncomplete,
    ScoreFileMismatch,
    SchemaMismatch,
    // generic
    InvalidArgument,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::CycleDetected: return "CycleDetected";
        case Errc::IncompleteTruthTable: return "IncompleteTruthTable";
        case Errc::TargetNotUnique: return "TargetNotUnique";
        case Errc::NoiseHasParents: return "NoiseHasParents";
        case Errc::ObservedWithoutNoiseParent: return "ObservedWithoutNoiseParent";
        case Errc::MissingNoiseValue: return "MissingNoiseValue";
        case Errc::ValueOutOfDomain: return "ValueOutOfDomain";
        case Errc::TargetInCoalition: return "TargetInCoalition";
        case Errc::InvalidThreshold: return "InvalidThreshold";
        case Errc::DegenerateParameter: return "DegenerateParameter";
        case Errc::StateSpaceTooLarge: return "StateSpaceTooLarge";
        case Errc::PositivityViolated: return "PositivityViolated";
        case Errc::UnsupportedMechanism: return "UnsupportedMechanism";
        case Errc::InconsistentObservation: return "InconsistentObservation";
        case Errc::UndefinedScore: return "UndefinedScore";
        case Errc::InvalidDistance: return "InvalidDistance";
        case Errc::CoalitionValueMismatch: return "CoalitionValueMismatch";
        case Errc::EmptySampleList: return "EmptySampleList";
        case Errc::AllSamplesUndefined: return "AllSamplesUndefined";
        case Errc::EmptyCandidateSet: return "EmptyCandidateSet";
        case Errc::PreconditionNotFullExplanation: return "PreconditionNotFullExplanation";
        case Errc::NoImprovingAssignment: return "NoImprovingAssignment";
        case Errc::TooManyPlayers: return "TooManyPlayers";
        case Errc::AllScoresZero: return "AllScoresZero";
        case Errc::MethodFailure: return "MethodFailure";
        case Errc::UnknownFeature: return "UnknownFeature";
        case Errc::OrderingIncomplete: return "OrderingIncomplete";
        case Errc::ScoreFileMismatch: return "ScoreFileMismatch";
        case Errc::SchemaMismatch: return "SchemaMismatch";
        case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "UnknownError";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message),
          code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool cond, Errc code, const std::string& message) {
    if (!cond) fail(code, message);
}

} // namespace coalex

#endif
