"""Character recall on a synthetic page.

A ground-truth box counts as found when some region's bounding box
overlaps it by more than half (intersection over union).
"""
from dctree.fixtures import box_regions, text_page
from dctree.regions import match_boxes, recall


def main():
    gts, boxes = text_page()
    regions = box_regions(boxes, 200, 60)
    for g, best in zip(gts, match_boxes(regions, gts)):
        print(f"{g.label:>4} {str(g.bbox):>22} best overlap {best:.3f} {'found' if best > 0.5 else 'missed'}")
    print(f"recall {recall(regions, gts):.3f}")


if __name__ == "__main__":
    main()
