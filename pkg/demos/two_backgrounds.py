"""A gray square between a darker and a lighter background.

The square is homogeneous, so the derivate tree holds it as one node, but
it is neither brighter nor darker than everything around it, so gray-level
extremal regions never isolate it.
"""
from dctree.fixtures import two_background_square
from dctree.pipeline import mser, mshr
from dctree.regions import ExtractParams, region_mask


def iou(a, b):
    return (a & b).sum() / (a | b).sum()


def describe(title, regions, square):
    print(title)
    for r in regions:
        overlap = iou(region_mask(r, regions.width, regions.height), square)
        print(f"  bbox={r.bbox} area={r.area:4d} stability={r.stability:7.1f} iou_with_square={overlap:.2f}")


def main():
    image, square = two_background_square()
    describe("homogeneous regions", mshr(image), square)
    describe("extremal regions, both polarities", mser(image, ExtractParams(polarity="both")), square)


if __name__ == "__main__":
    main()
