use std::fmt::Write;

use crate::scene::MicRole;

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapRow {
    /// `None` when the scene carries no geometry (imported IRs).
    pub position_m: Option<[f64; 3]>,
    pub role: MicRole,
    pub nr_db: f64,
}

/// Raw per-position noise reduction, one row per mic, no interpolation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HeatmapTable {
    pub rows: Vec<HeatmapRow>,
}

pub fn heatmap_table(
    points: impl IntoIterator<Item = (Option<[f64; 3]>, MicRole, f64)>,
) -> HeatmapTable {
    HeatmapTable {
        rows: points
            .into_iter()
            .map(|(position_m, role, nr_db)| HeatmapRow {
                position_m,
                role,
                nr_db,
            })
            .collect(),
    }
}

impl HeatmapTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `x_m,y_m,z_m,mic_role,nr_db`; coordinates are blank when unknown.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x_m,y_m,z_m,mic_role,nr_db\n");
        for row in &self.rows {
            let role = match row.role {
                MicRole::Primary => "primary",
                MicRole::Secondary => "secondary",
            };
            match row.position_m {
                Some([x, y, z]) => writeln!(out, "{x},{y},{z},{role},{}", row.nr_db),
                None => writeln!(out, ",,,{role},{}", row.nr_db),
            }
            .expect("writing to a String");
        }
        out
    }
}
