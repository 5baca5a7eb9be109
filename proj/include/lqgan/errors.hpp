// Error types shared by every lqgan module.
#pragma once

#include <stdexcept>
#include <string>

namespace lqgan {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define LQGAN_DEFINE_ERROR(Name)                                          \
    class Name : public Error {                                           \
    public:                                                               \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    };

LQGAN_DEFINE_ERROR(NotPositiveDefinite)
LQGAN_DEFINE_ERROR(BatchTooSmall)
LQGAN_DEFINE_ERROR(DegenerateStart)
LQGAN_DEFINE_ERROR(DomainError)
LQGAN_DEFINE_ERROR(DomainExit)
LQGAN_DEFINE_ERROR(UnsupportedCombination)
LQGAN_DEFINE_ERROR(EigenFailure)
LQGAN_DEFINE_ERROR(FixtureFailure)
LQGAN_DEFINE_ERROR(NegativeRadicand)
LQGAN_DEFINE_ERROR(DegenerateInterval)
LQGAN_DEFINE_ERROR(UnsupportedSubsystem)
LQGAN_DEFINE_ERROR(IoError)
LQGAN_DEFINE_ERROR(InvalidArgument)

#undef LQGAN_DEFINE_ERROR

}  // namespace lqgan
