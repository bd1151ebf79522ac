use harvest_cli::config::{Axis, RunConfig};
use harvest_cli::emit::{branch_csv, czero_csv, render_svg, RunArtifact, BRANCH_HEADER};
use harvest_cli::CliError;
use harvest_core::continuation::{Branch, Chart};
use harvest_core::diagram::{assemble_diagram, stable_seed, DiagramOptions};
use harvest_core::solver::Problem;

#[test]
fn empty_branch_is_an_error() {
    let p = Problem::canonical(0.2);
    let b = Branch::new(20.0, Chart::Phi);
    assert!(matches!(branch_csv(&p, &b), Err(CliError::Emit(_))));
    assert!(matches!(czero_csv(&p, &b), Err(CliError::Emit(_))));
}

#[test]
fn single_point_branch_has_header_and_one_row() {
    let p = Problem::canonical(0.2);
    let mut b = Branch::new(20.0, Chart::Phi);
    b.push(&p, stable_seed(&p, 20.0).unwrap());
    let csv = branch_csv(&p, &b).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], BRANCH_HEADER);
    let cells: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cells.len(), BRANCH_HEADER.split(',').count());
    assert_eq!(cells[0], "0");
    assert_eq!(cells[1], "0");
    assert_eq!(cells[8], "0");
}

#[test]
fn diagram_round_trips_through_json() {
    let p = Problem::canonical(0.2);
    let d = assemble_diagram(&p, 20.0, &DiagramOptions::default()).map_err(|(_, e)| e).unwrap();
    let cfg = RunConfig::from_toml("schema_version = \"bifurcate/1\"\n").unwrap();
    let json = RunArtifact::new("diagram", &cfg).with_diagram(&d).to_json().unwrap();
    let back: RunArtifact = serde_json::from_str(&json).unwrap();
    assert_eq!(back.diagram().unwrap(), d);
    assert_eq!(back.config_echo, cfg);
}

#[test]
fn svg_styles_pieces_by_index() {
    let p = Problem::canonical(0.2);
    let d = assemble_diagram(&p, 20.0, &DiagramOptions::default()).map_err(|(_, e)| e).unwrap();
    let svg = render_svg(&p, &d, Axis::UMax).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("stroke-dasharray=\"9 5\""));
    assert!(svg.contains("p_*"));
}
