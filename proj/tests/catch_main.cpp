// Catch2 v3 amalgamated: the .cpp already provides main().
#include <catch2/catch_amalgamated.hpp>
