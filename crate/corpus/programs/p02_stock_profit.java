public class StockProfit {
    public static int main(String[] args) {
        int[] prices = {7, 1, 5, 3, 6, 4};
        int minPrice = Integer.MAX_VALUE;
        int best = 0;
        int days = 0;
        for (int p : prices) {
            days++;
            if (p < minPrice) {
                minPrice = p;
            } else if (p - minPrice > best) {
                best = p - minPrice;
            }
        }
        return best;
    }
}
