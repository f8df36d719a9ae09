// SPDX-License-Identifier: Apache-2.0

#ifndef CVS_IO_HPP
#define CVS_IO_HPP

#include <iosfwd>
#include <string>

#include "cvs/fields.hpp"

namespace cvs {

// Field snapshot format shared by every module and the CLI:
//   header line  "CVS1 <Nx> <Ny> [<Nz>] <name>\n"
//   payload      row-major little-endian 64-bit floats
// Torus fields are ordered x1-major (x2 fastest); strip fields x1, x2, z
// with z fastest.
void write_cvs1(std::ostream& os, const TorusScalar& f, const std::string& name);
void write_cvs1(std::ostream& os, const StripScalar& f, const std::string& name);
void write_cvs1(const std::string& path, const TorusScalar& f, const std::string& name);
void write_cvs1(const std::string& path, const StripScalar& f, const std::string& name);

struct Cvs1Header {
    Index nx = 0, ny = 0, nz = 0;  // nz = 0 for torus fields
    std::string name;
};

Cvs1Header read_cvs1_header(std::istream& is);
TorusScalar read_cvs1_torus(std::istream& is, std::string* name = nullptr);
StripScalar read_cvs1_strip(std::istream& is, std::shared_ptr<const ChebGrid> zgrid,
                            Side side, std::string* name = nullptr);
TorusScalar read_cvs1_torus(const std::string& path, std::string* name = nullptr);

}  // namespace cvs

#endif
