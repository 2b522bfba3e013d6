#include "curvedhho/mesh_io.hpp"

#include "curvedhho/errors.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace curvedhho {

namespace {

long long element_token(ElementId e) { return e == kBoundary ? -1 : static_cast<long long>(e); }

ElementId parse_element(long long v) { return v < 0 ? kBoundary : static_cast<ElementId>(v); }

// Next non-empty, non-comment line.
bool next_line(std::istream& is, std::string& line, std::size_t& lineno)
{
    while (std::getline(is, line)) {
        ++lineno;
        const auto pos = line.find_first_not_of(" \t\r");
        if (pos == std::string::npos || line[pos] == '#') continue;
        return true;
    }
    return false;
}

[[noreturn]] void fail(std::size_t lineno, const std::string& what)
{
    throw IoError("mesh file line " + std::to_string(lineno) + ": " + what);
}

std::size_t read_header(std::istream& is, const std::string& name, std::size_t& lineno)
{
    std::string line;
    if (!next_line(is, line, lineno)) fail(lineno, "expected section " + name);
    std::istringstream ss(line);
    std::string tag;
    std::size_t count = 0;
    if (!(ss >> tag >> count) || tag != name) fail(lineno, "expected '" + name + " <count>'");
    return count;
}

} // namespace

void write_mesh(std::ostream& os, const Mesh& mesh)
{
    os << "# curvedhho mesh v1\n" << std::setprecision(17);
    os << "VERTICES " << mesh.vertices().size() << '\n';
    for (std::size_t v = 0; v < mesh.vertices().size(); ++v) {
        os << v << ' ' << mesh.vertices()[v].x() << ' ' << mesh.vertices()[v].y() << '\n';
    }
    os << "CURVES " << mesh.num_faces() << '\n';
    for (FaceId f = 0; f < mesh.num_faces(); ++f) {
        const Curve& c = mesh.face(f).curve;
        os << f << ' ';
        if (const auto* s = std::get_if<Segment>(&c.shape())) {
            os << "SEGMENT " << s->a.x() << ' ' << s->a.y() << ' ' << s->b.x() << ' ' << s->b.y();
        } else if (const auto* a = std::get_if<CircularArc>(&c.shape())) {
            os << "CIRCLE " << a->center.x() << ' ' << a->center.y() << ' ' << a->radius << ' ' << a->t0 << ' '
               << a->t1 << ' ' << a->orientation;
        } else {
            const auto& e = std::get<EllipseArc>(c.shape());
            os << "ELLIPSE " << e.center.x() << ' ' << e.center.y() << ' ' << e.axes(0, 0) << ' ' << e.axes(0, 1)
               << ' ' << e.axes(1, 0) << ' ' << e.axes(1, 1) << ' ' << e.t0 << ' ' << e.t1;
        }
        os << '\n';
    }
    os << "FACES " << mesh.num_faces() << '\n';
    for (FaceId f = 0; f < mesh.num_faces(); ++f) {
        const Face& face = mesh.face(f);
        os << f << ' ' << f << ' ' << element_token(face.elem_left) << ' ' << element_token(face.elem_right) << ' '
           << face.normal_orientation << '\n';
    }
    os << "ELEMENTS " << mesh.num_elements() << '\n';
    for (ElementId e = 0; e < mesh.num_elements(); ++e) {
        const Element& el = mesh.element(e);
        os << e << ' ' << el.region << ' ' << el.faces.size();
        for (const FaceUse& use : el.faces) os << ' ' << use.face << ' ' << (use.reversed ? -1 : 1);
        os << '\n';
    }
}

Mesh read_mesh(std::istream& is)
{
    std::size_t lineno = 0;
    std::string line;

    const std::size_t nv = read_header(is, "VERTICES", lineno);
    std::vector<Point> vertices(nv);
    for (std::size_t i = 0; i < nv; ++i) {
        if (!next_line(is, line, lineno)) fail(lineno, "truncated VERTICES");
        std::istringstream ss(line);
        std::size_t id = 0;
        double x = 0.0;
        double y = 0.0;
        if (!(ss >> id >> x >> y) || id >= nv) fail(lineno, "bad vertex record");
        vertices[id] = Point(x, y);
    }

    const std::size_t nc = read_header(is, "CURVES", lineno);
    std::vector<Curve> curves(nc);
    for (std::size_t i = 0; i < nc; ++i) {
        if (!next_line(is, line, lineno)) fail(lineno, "truncated CURVES");
        std::istringstream ss(line);
        std::size_t id = 0;
        std::string type;
        if (!(ss >> id >> type) || id >= nc) fail(lineno, "bad curve record");
        if (type == "SEGMENT") {
            Segment s;
            if (!(ss >> s.a.x() >> s.a.y() >> s.b.x() >> s.b.y())) fail(lineno, "bad SEGMENT parameters");
            curves[id] = s;
        } else if (type == "CIRCLE") {
            CircularArc a;
            if (!(ss >> a.center.x() >> a.center.y() >> a.radius >> a.t0 >> a.t1 >> a.orientation)) {
                fail(lineno, "bad CIRCLE parameters");
            }
            curves[id] = a;
        } else if (type == "ELLIPSE") {
            EllipseArc e;
            if (!(ss >> e.center.x() >> e.center.y() >> e.axes(0, 0) >> e.axes(0, 1) >> e.axes(1, 0) >>
                  e.axes(1, 1) >> e.t0 >> e.t1)) {
                fail(lineno, "bad ELLIPSE parameters");
            }
            curves[id] = e;
        } else {
            fail(lineno, "unknown curve type '" + type + "'");
        }
    }

    const std::size_t nf = read_header(is, "FACES", lineno);
    std::vector<Face> faces(nf);
    for (std::size_t i = 0; i < nf; ++i) {
        if (!next_line(is, line, lineno)) fail(lineno, "truncated FACES");
        std::istringstream ss(line);
        std::size_t id = 0;
        std::size_t curve = 0;
        long long left = 0;
        long long right = 0;
        int orient = 1;
        if (!(ss >> id >> curve >> left >> right >> orient) || id >= nf || curve >= nc) {
            fail(lineno, "bad face record");
        }
        faces[id].curve = curves[curve];
        faces[id].elem_left = parse_element(left);
        faces[id].elem_right = parse_element(right);
        faces[id].normal_orientation = orient;
    }

    const std::size_t ne = read_header(is, "ELEMENTS", lineno);
    std::vector<Element> elements(ne);
    for (std::size_t i = 0; i < ne; ++i) {
        if (!next_line(is, line, lineno)) fail(lineno, "truncated ELEMENTS");
        std::istringstream ss(line);
        std::size_t id = 0;
        int region = 0;
        std::size_t count = 0;
        if (!(ss >> id >> region >> count) || id >= ne) fail(lineno, "bad element record");
        elements[id].region = region;
        for (std::size_t k = 0; k < count; ++k) {
            std::size_t face = 0;
            int dir = 1;
            if (!(ss >> face >> dir) || (dir != 1 && dir != -1)) fail(lineno, "bad face use");
            elements[id].faces.push_back({face, dir < 0});
        }
    }

    double extent = 1.0;
    for (const Point& p : vertices) extent = std::max(extent, p.cwiseAbs().maxCoeff());
    snap_face_vertices(vertices, faces, 1e-10 * extent);
    return Mesh(std::move(vertices), std::move(faces), std::move(elements));
}

void write_mesh_file(const std::filesystem::path& path, const Mesh& mesh)
{
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    write_mesh(os, mesh);
    if (!os) throw IoError("failed writing " + path.string());
}

Mesh read_mesh_file(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path.string());
    return read_mesh(is);
}

} // namespace curvedhho
