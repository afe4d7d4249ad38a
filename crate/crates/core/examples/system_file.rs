//! Defining a system in the text format and inspecting what the parser
//! produces, including its error reporting.
//!
//!     cargo run --example system_file

use contraction_sos::cli::parse_definition;

const TEXT: &str = "\
format = 1
name = damped
[states]
x, v
[constants]
c = 1/2
[params]
w = 1 in [0.5, 2]
[dynamics]
x' = v
v' = -c*v - w*x - x^3
";

fn main() {
    let def = parse_definition(TEXT, &[]).expect("valid definition");
    let sys = &def.system;
    let mut names = sys.states.clone();
    names.extend(sys.params.iter().map(|p| p.name.clone()));
    println!("{} with constants {:?}", sys.name, def.constants);
    for (s, f) in sys.states.iter().zip(&sys.field) {
        println!("  {s}' = {}", f.display_with(&names));
    }
    let jac = sys.jacobian().expect("polynomial field");
    println!("  J21 = {}", jac.get(1, 0).display_with(&names));

    for bad in [
        TEXT.replace("- x^3", "- z^3"),
        TEXT.replace("w*x", "w^2*x"),
        TEXT.replace("v' = -c*v", "v' = -c*v +* 1"),
    ] {
        println!("error: {}", parse_definition(&bad, &[]).unwrap_err());
    }
}
