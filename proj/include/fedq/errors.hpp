#ifndef FEDQ_ERRORS_HPP
#define FEDQ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fedq {

#define FEDQ_DEFINE_ERROR(Name)                                        \
    struct Name : std::runtime_error {                                 \
        explicit Name(const std::string& what_arg)                     \
            : std::runtime_error(std::string(#Name ": ") + what_arg) {} \
    }

// datastore
FEDQ_DEFINE_ERROR(HeaderMismatch);
FEDQ_DEFINE_ERROR(ParseError);
FEDQ_DEFINE_ERROR(UnknownColumn);

// perturb
FEDQ_DEFINE_ERROR(PolicySchemaMismatch);
FEDQ_DEFINE_ERROR(EmptyColumn);

// keyprotocol
FEDQ_DEFINE_ERROR(KeySetTooSmall);
FEDQ_DEFINE_ERROR(IndexOutOfRange);
FEDQ_DEFINE_ERROR(AliasMismatch);
FEDQ_DEFINE_ERROR(TamperedResponse);
FEDQ_DEFINE_ERROR(MalformedCandidate);
FEDQ_DEFINE_ERROR(NoDecryptableEntry);
FEDQ_DEFINE_ERROR(MultipleDecryptable);

// roles
FEDQ_DEFINE_ERROR(ProtocolOrderError);
FEDQ_DEFINE_ERROR(UnknownProvider);
FEDQ_DEFINE_ERROR(UnknownSession);
FEDQ_DEFINE_ERROR(SchemaMismatch);
FEDQ_DEFINE_ERROR(DecryptFailure);
FEDQ_DEFINE_ERROR(PartialProviderFailure);
FEDQ_DEFINE_ERROR(NoProviders);

// transport
FEDQ_DEFINE_ERROR(FrameError);
FEDQ_DEFINE_ERROR(UnknownMessage);
FEDQ_DEFINE_ERROR(SchemaError);
FEDQ_DEFINE_ERROR(StepCapExceeded);
FEDQ_DEFINE_ERROR(TranscriptParseError);

// cli
FEDQ_DEFINE_ERROR(ConfigError);

#undef FEDQ_DEFINE_ERROR

}  // namespace fedq

#endif
