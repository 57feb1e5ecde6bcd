//! Writes a generated lunar-like map and its inspection mission.
//!
//! Usage: lunar_site <out_dir> [stones] [pois_per_stone] [seed]

use std::path::PathBuf;

use multigoal::gridmap::save_map;
use multigoal::scenario::{lunar_scenario, LunarParams};
use multigoal::validity::{CheckerConfig, RobotFootprint};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().ok_or("missing output directory")?);
    let stones = args.next().map(|s| s.parse()).transpose()?.unwrap_or(13);
    let pois_per_stone = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let params = LunarParams {
        stones,
        pois_per_stone,
        ..LunarParams::default()
    };
    let site = lunar_scenario(&params, seed, RobotFootprint::default(), CheckerConfig::default())?;
    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("env.json"), serde_json::to_string_pretty(&site.spec)?)?;
    save_map(&site.map, out.join("map.json"))?;
    site.mission.save(out.join("mission.json"))?;
    println!("wrote {} ToIs to {}", site.mission.tois.len(), out.display());
    Ok(())
}
