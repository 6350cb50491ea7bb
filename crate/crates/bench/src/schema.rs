//! Schemas the generators and suites run against.

/// Taxonomy, flower characteristics, habitats and sequence entries. The area
/// methods on polygons are registered as equivalent so the optimizer may
/// pick the cheaper one.
pub const BIO_SCHEMA: &str = "
class Order { name: string; families: collection(ref(Family)); }
class Family { name: string; genera: collection(ref(Genera)); }
class Genera { name: string; species: collection(ref(PlantSpecies)); }
class PlantSpecies {
  name: string;
  georegion: polygon;
  habitats: collection(ref(Habitat));
  flowerchar: ref(FlowerChar);
  stDNAEntries: collection(ref(EMBLEntry));
}
class FlowerChar { color: string; inflochar: ref(InfloChar); }
class InfloChar { kind: string; }
class Habitat { region: polygon; }
class EMBLEntry { accession: string; dna: dna; }
cost polygon.area = 8 equiv area;
cost polygon.area_fan = 3 equiv area;
";

pub const SEQUOIA_SCHEMA: &str = "
class SitePoint { id: int; name: string; location: point; }
class LandPolygon { id: int; landuse: string; shape: polygon; area: real; }
class Graph { id: int; path: polyline; }
";
