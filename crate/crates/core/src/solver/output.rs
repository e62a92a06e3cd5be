use std::io::{self, Write};

use super::{CellField, PeriodicGrid};
use crate::diagnostics::{DiagnosticsRow, CSV_HEADER};

/// `# t=<time>`, then `x[,y],u` with one row per cell in storage order.
pub fn write_snapshot_csv<W: Write>(mut w: W, grid: &PeriodicGrid, field: &CellField) -> io::Result<()> {
    writeln!(w, "# t={:.16e}", field.time)?;
    if grid.dimension() == 1 {
        writeln!(w, "x,u")?;
    } else {
        writeln!(w, "x,y,u")?;
    }
    for (idx, u) in field.values.iter().enumerate() {
        let c = grid.center(idx);
        if grid.dimension() == 1 {
            writeln!(w, "{:.16e},{u:.16e}", c[0])?;
        } else {
            writeln!(w, "{:.16e},{:.16e},{u:.16e}", c[0], c[1])?;
        }
    }
    Ok(())
}

pub fn write_diagnostics_csv<W: Write>(mut w: W, rows: &[DiagnosticsRow]) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for row in rows {
        row.write_csv(&mut w)?;
    }
    Ok(())
}
